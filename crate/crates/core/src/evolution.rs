//! Discrete evolution systems on the reference interval `(0, 1)`.
//!
//! A horizon `nu` is absorbed into the dynamics: the state solves
//! `d/dt y + nu A y = nu B u` on `(0, 1)`. Time is discretized by
//! piecewise constants (implicit Euler), so one step reads
//!
//! ```text
//! (Mass + nu k A) y_m = Mass y_{m-1} + nu k C u_m,      k = 1 / M.
//! ```
//!
//! The adjoint recursion is the exact transpose of this update. Gradients
//! and the derivative in `nu` are therefore derivatives of the discrete
//! problem, not approximations of the continuous ones.

use crate::error::{Error, Result};
use crate::linalg::LinearSolve;
use crate::scalar::dot;
use crate::Scalar;

/// Equidistant grid of `intervals` cells on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeGrid {
    intervals: usize,
}

impl TimeGrid {
    pub fn new(intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::ConfigError("time grid needs at least one interval".into()));
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn step<T: Scalar>(&self) -> T {
        T::one() / T::from_usize_lossy(self.intervals)
    }

    /// Node `t_m = m k`.
    pub fn node<T: Scalar>(&self, m: usize) -> T {
        T::from_usize_lossy(m) / T::from_usize_lossy(self.intervals)
    }

    /// Midpoint of interval `m` (0-based).
    pub fn midpoint<T: Scalar>(&self, m: usize) -> T {
        (T::from_usize_lossy(m) + T::lit(0.5)) / T::from_usize_lossy(self.intervals)
    }
}

/// Piecewise constant control, one row of `n_c` values per time interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Control<T> {
    grid: TimeGrid,
    lower: Vec<T>,
    upper: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> Control<T> {
    /// Checks bounds and feasibility.
    pub fn new(grid: TimeGrid, lower: Vec<T>, upper: Vec<T>, values: Vec<T>) -> Result<Self> {
        check_bounds(&lower, &upper)?;
        let n_c = lower.len();
        if values.len() != grid.intervals() * n_c {
            return Err(Error::ConfigError(format!(
                "control has {} values, expected {} x {}",
                values.len(),
                grid.intervals(),
                n_c
            )));
        }
        for (idx, v) in values.iter().enumerate() {
            let j = idx % n_c;
            if !(*v >= lower[j] && *v <= upper[j]) {
                return Err(Error::ConfigError(format!(
                    "control value {v} at interval {} dof {j} violates [{}, {}]",
                    idx / n_c,
                    lower[j],
                    upper[j]
                )));
            }
        }
        Ok(Self { grid, lower, upper, values })
    }

    /// Constant value `(1 - theta) lower + theta upper` everywhere.
    pub fn interpolated(grid: TimeGrid, lower: Vec<T>, upper: Vec<T>, theta: T) -> Result<Self> {
        check_bounds(&lower, &upper)?;
        let row: Vec<T> = lower.iter().zip(&upper).map(|(&a, &b)| a + theta * (b - a)).collect();
        let values = row.iter().copied().cycle().take(row.len() * grid.intervals()).collect();
        Self::new(grid, lower, upper, values)
    }

    pub fn midpoint(grid: TimeGrid, lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        Self::interpolated(grid, lower, upper, T::lit(0.5))
    }

    /// Samples `f(t, j)` at interval midpoints (in reference time) and
    /// clamps into the box.
    pub fn sample(grid: TimeGrid, lower: Vec<T>, upper: Vec<T>, f: impl Fn(T, usize) -> T) -> Result<Self> {
        check_bounds(&lower, &upper)?;
        let n_c = lower.len();
        let mut values = Vec::with_capacity(grid.intervals() * n_c);
        for m in 0..grid.intervals() {
            let t = grid.midpoint::<T>(m);
            for j in 0..n_c {
                values.push(f(t, j).max(lower[j]).min(upper[j]));
            }
        }
        Self::new(grid, lower, upper, values)
    }

    /// Replaces the values, keeping grid and bounds. Values are trusted to
    /// be feasible (checked in debug builds).
    pub(crate) fn with_values(&self, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        debug_assert!(values.iter().enumerate().all(|(i, v)| {
            let j = i % self.lower.len();
            *v >= self.lower[j] && *v <= self.upper[j]
        }));
        Self { grid: self.grid, lower: self.lower.clone(), upper: self.upper.clone(), values }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn control_dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Values on interval `m`.
    pub fn interval(&self, m: usize) -> &[T] {
        let n_c = self.lower.len();
        &self.values[m * n_c..(m + 1) * n_c]
    }

    pub fn is_feasible(&self) -> bool {
        let n_c = self.lower.len();
        self.values.iter().enumerate().all(|(i, v)| *v >= self.lower[i % n_c] && *v <= self.upper[i % n_c])
    }
}

fn check_bounds<T: Scalar>(lower: &[T], upper: &[T]) -> Result<()> {
    if lower.len() != upper.len() || lower.is_empty() {
        return Err(Error::ConfigError("control bounds must be non-empty and of equal length".into()));
    }
    if let Some(j) = (0..lower.len()).find(|&j| !(lower[j] < upper[j])) {
        return Err(Error::ConfigError(format!("bound {j}: lower {} must be below upper {}", lower[j], upper[j])));
    }
    Ok(())
}

/// States at the nodes `t_0, ..., t_M`; the dG(0) value on interval `m`
/// (1-based) is `states[m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory<T> {
    grid: TimeGrid,
    dim: usize,
    states: Vec<T>,
}

impl<T: Scalar> StateTrajectory<T> {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn state_dim(&self) -> usize {
        self.dim
    }

    pub fn node(&self, m: usize) -> &[T] {
        &self.states[m * self.dim..(m + 1) * self.dim]
    }

    pub fn initial(&self) -> &[T] {
        self.node(0)
    }

    pub fn terminal(&self) -> &[T] {
        self.node(self.grid.intervals())
    }
}

/// Adjoint quantities of one terminal misfit.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointData<T> {
    grid: TimeGrid,
    control_dim: usize,
    /// Element averages of `B* p` per interval and control dof.
    bstar_p: Vec<T>,
    terminal_misfit: Vec<T>,
    misfit_norm: T,
    /// Discrete adjoint `p_m` for intervals `m = 1..=M`, row `m - 1`.
    adjoint: Vec<T>,
}

impl<T: Scalar> AdjointData<T> {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn bstar_p(&self) -> &[T] {
        &self.bstar_p
    }

    /// `B* p` on interval `m` (0-based).
    pub fn bstar_p_interval(&self, m: usize) -> &[T] {
        &self.bstar_p[m * self.control_dim..(m + 1) * self.control_dim]
    }

    pub fn terminal_misfit(&self) -> &[T] {
        &self.terminal_misfit
    }

    pub fn misfit_norm(&self) -> T {
        self.misfit_norm
    }

    /// Adjoint state on interval `m` (0-based).
    pub fn adjoint_interval(&self, m: usize) -> &[T] {
        let n = self.terminal_misfit.len();
        &self.adjoint[m * n..(m + 1) * n]
    }

    /// Zero adjoint for a misfit too small to normalize.
    pub(crate) fn vanishing(grid: TimeGrid, control_dim: usize, terminal_misfit: Vec<T>, misfit_norm: T) -> Self {
        let n = terminal_misfit.len();
        Self {
            grid,
            control_dim,
            bstar_p: vec![T::zero(); grid.intervals() * control_dim],
            terminal_misfit,
            misfit_norm,
            adjoint: vec![T::zero(); grid.intervals() * n],
        }
    }

    /// Same data for the adjoint scaled by `alpha`.
    pub fn scaled(&self, alpha: T) -> Self {
        let mut out = self.clone();
        out.bstar_p.iter_mut().for_each(|x| *x = *x * alpha);
        out.adjoint.iter_mut().for_each(|x| *x = *x * alpha);
        out
    }
}

/// One problem instance: dynamics, target ball and control box.
///
/// Implementations are immutable after construction; all solves allocate
/// their own buffers, so a system can be shared between threads.
pub trait EvolutionSystem<T: Scalar>: Send + Sync {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    /// Quadrature weights of the control measure, one per control dof.
    fn control_weights(&self) -> &[T];
    fn target(&self) -> &[T];
    /// Radius `delta0` of the target ball.
    fn radius(&self) -> T;
    fn initial_state(&self) -> &[T];
    fn lower(&self) -> &[T];
    fn upper(&self) -> &[T];

    /// Gram operator of the state space `H`: `<a, b>_H = dot(a, h_riesz(b))`.
    fn h_riesz(&self, a: &[T]) -> Vec<T>;

    fn h_inner(&self, a: &[T], b: &[T]) -> T {
        dot(a, &self.h_riesz(b))
    }

    fn solve_state(&self, nu: T, u: &Control<T>) -> Result<StateTrajectory<T>>;

    /// Terminal state only; implementations avoid storing the trajectory.
    fn solve_terminal(&self, nu: T, u: &Control<T>) -> Result<Vec<T>> {
        Ok(self.solve_state(nu, u)?.terminal().to_vec())
    }

    /// Backward sweep with terminal value `misfit / |misfit|`.
    fn solve_adjoint(&self, nu: T, grid: TimeGrid, terminal_misfit: &[T]) -> Result<AdjointData<T>>;

    /// Discrete `int_0^1 <B u - A y, p> dt`.
    fn hamiltonian_pairing(&self, nu: T, u: &Control<T>, y: &StateTrajectory<T>, p: &AdjointData<T>) -> Result<T>;

    fn h_norm(&self, a: &[T]) -> T {
        self.h_inner(a, a).max(T::zero()).sqrt()
    }

    /// Misfit norm below which the adjoint terminal value is undefined.
    fn degeneracy_threshold(&self) -> T {
        T::lit(1e-12) * (T::one() + self.h_norm(self.target()))
    }

    fn midpoint_control(&self, grid: TimeGrid) -> Result<Control<T>> {
        Control::midpoint(grid, self.lower().to_vec(), self.upper().to_vec())
    }

    fn control_from_values(&self, grid: TimeGrid, values: Vec<T>) -> Result<Control<T>> {
        Control::new(grid, self.lower().to_vec(), self.upper().to_vec(), values)
    }
}

/// `f(nu, u) = |y(1) - y_d| - delta0`.
pub fn distance_value<T: Scalar, S: EvolutionSystem<T> + ?Sized>(system: &S, nu: T, u: &Control<T>) -> Result<T> {
    let terminal = system.solve_terminal(nu, u)?;
    let misfit = sub(&terminal, system.target());
    let value = system.h_norm(&misfit) - system.radius();
    if !value.is_finite() {
        return Err(Error::SolverFailure("non-finite terminal state".into()));
    }
    Ok(value)
}

/// State and adjoint at `(nu, u)`. The gradient of `u -> |y(1) - y_d|` with
/// respect to `values[m][j]` is `nu k w_j bstar_p[m][j]`.
pub fn adjoint_sensitivity<T: Scalar, S: EvolutionSystem<T> + ?Sized>(
    system: &S,
    nu: T,
    u: &Control<T>,
) -> Result<(StateTrajectory<T>, AdjointData<T>)> {
    let y = system.solve_state(nu, u)?;
    let misfit = sub(y.terminal(), system.target());
    let p = system.solve_adjoint(nu, u.grid(), &misfit)?;
    Ok((y, p))
}

/// Exact derivative of `nu -> f_h(nu, u)` for fixed `u`.
pub fn hamiltonian_integral<T: Scalar, S: EvolutionSystem<T> + ?Sized>(
    system: &S,
    nu: T,
    u: &Control<T>,
    y: &StateTrajectory<T>,
    p: &AdjointData<T>,
) -> Result<T> {
    system.hamiltonian_pairing(nu, u, y, p)
}

pub(crate) fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Spatial operators of a linear system discretized in time by implicit Euler.
pub trait ImplicitEulerOperators<T: Scalar>: Send + Sync {
    type Factor: LinearSolve<T>;

    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    /// Factors `Mass + s A`.
    fn factor_step(&self, s: T) -> Result<Self::Factor>;
    /// `out = Mass x`
    fn mass_mul(&self, x: &[T], out: &mut [T]);
    /// `out = A x`
    fn operator_mul(&self, x: &[T], out: &mut [T]);
    /// `out += alpha C u`
    fn control_mul_add(&self, alpha: T, u: &[T], out: &mut [T]);
    /// `out = Cᵀ p`
    fn control_tmul(&self, p: &[T], out: &mut [T]);
}

/// Target data, bounds and control weights of a problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData<T> {
    pub initial_state: Vec<T>,
    pub target: Vec<T>,
    pub radius: T,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub weights: Vec<T>,
}

/// A linear evolution system `Mass y' + A y = C u` with target data.
#[derive(Debug, Clone)]
pub struct LinearEvolution<T, Ops> {
    ops: Ops,
    data: ProblemData<T>,
}

impl<T: Scalar, Ops: ImplicitEulerOperators<T>> LinearEvolution<T, Ops> {
    /// Validates dimensions, bounds and `|y0 - y_d| > delta0`.
    pub fn new(ops: Ops, data: ProblemData<T>) -> Result<Self> {
        let (n, nc) = (ops.state_dim(), ops.control_dim());
        if data.initial_state.len() != n || data.target.len() != n {
            return Err(Error::ConfigError(format!("initial state and target must have {n} entries")));
        }
        if data.lower.len() != nc || data.weights.len() != nc {
            return Err(Error::ConfigError(format!("bounds and weights must have {nc} entries")));
        }
        check_bounds(&data.lower, &data.upper)?;
        if data.weights.iter().any(|w| !(*w > T::zero())) {
            return Err(Error::ConfigError("control weights must be positive".into()));
        }
        if !(data.radius > T::zero()) {
            return Err(Error::ConfigError("target radius must be positive".into()));
        }
        let sys = Self { ops, data };
        let gap = sys.h_norm(&sub(&sys.data.initial_state, &sys.data.target));
        if !(gap > sys.data.radius) {
            return Err(Error::ConfigError(format!(
                "initial state already inside the target ball (|y0 - y_d| = {gap}, delta0 = {})",
                sys.data.radius
            )));
        }
        Ok(sys)
    }

    pub fn operators(&self) -> &Ops {
        &self.ops
    }

    pub fn data(&self) -> &ProblemData<T> {
        &self.data
    }

    /// Copy with another target radius.
    pub fn with_radius(&self, radius: T) -> Result<Self>
    where
        Ops: Clone,
    {
        let mut data = self.data.clone();
        data.radius = radius;
        Self::new(self.ops.clone(), data)
    }

    fn check_control(&self, u: &Control<T>) -> Result<()> {
        if u.control_dim() != self.ops.control_dim() {
            return Err(Error::ConfigError(format!(
                "control has {} dofs, system expects {}",
                u.control_dim(),
                self.ops.control_dim()
            )));
        }
        Ok(())
    }

    fn check_nu(nu: T) -> Result<()> {
        if !(nu > T::zero()) || !nu.is_finite() {
            return Err(Error::ConfigError(format!("horizon must be positive, got {nu}")));
        }
        Ok(())
    }

    /// Runs the forward recursion, handing every new state to `visit`.
    fn forward(&self, nu: T, u: &Control<T>, mut visit: impl FnMut(&[T])) -> Result<Vec<T>> {
        Self::check_nu(nu)?;
        self.check_control(u)?;
        let k: T = u.grid().step();
        let factor = self.ops.factor_step(nu * k)?;
        let n = self.ops.state_dim();
        let mut y = self.data.initial_state.clone();
        let mut rhs = vec![T::zero(); n];
        for m in 0..u.grid().intervals() {
            self.ops.mass_mul(&y, &mut rhs);
            self.ops.control_mul_add(nu * k, u.interval(m), &mut rhs);
            factor.solve_in_place(&mut rhs);
            std::mem::swap(&mut y, &mut rhs);
            visit(&y);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure("non-finite state".into()));
        }
        Ok(y)
    }
}

impl<T: Scalar, Ops: ImplicitEulerOperators<T>> EvolutionSystem<T> for LinearEvolution<T, Ops> {
    fn state_dim(&self) -> usize {
        self.ops.state_dim()
    }

    fn control_dim(&self) -> usize {
        self.ops.control_dim()
    }

    fn control_weights(&self) -> &[T] {
        &self.data.weights
    }

    fn target(&self) -> &[T] {
        &self.data.target
    }

    fn radius(&self) -> T {
        self.data.radius
    }

    fn initial_state(&self) -> &[T] {
        &self.data.initial_state
    }

    fn lower(&self) -> &[T] {
        &self.data.lower
    }

    fn upper(&self) -> &[T] {
        &self.data.upper
    }

    fn h_riesz(&self, a: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); a.len()];
        self.ops.mass_mul(a, &mut out);
        out
    }

    fn solve_state(&self, nu: T, u: &Control<T>) -> Result<StateTrajectory<T>> {
        let n = self.ops.state_dim();
        let mut states = Vec::with_capacity((u.grid().intervals() + 1) * n);
        states.extend_from_slice(&self.data.initial_state);
        self.forward(nu, u, |y| states.extend_from_slice(y))?;
        Ok(StateTrajectory { grid: u.grid(), dim: n, states })
    }

    fn solve_terminal(&self, nu: T, u: &Control<T>) -> Result<Vec<T>> {
        self.forward(nu, u, |_| {})
    }

    fn solve_adjoint(&self, nu: T, grid: TimeGrid, terminal_misfit: &[T]) -> Result<AdjointData<T>> {
        Self::check_nu(nu)?;
        let n = self.ops.state_dim();
        let nc = self.ops.control_dim();
        if terminal_misfit.len() != n {
            return Err(Error::ConfigError(format!("misfit must have {n} entries")));
        }
        let misfit_norm = self.h_norm(terminal_misfit);
        let threshold = self.degeneracy_threshold();
        if !misfit_norm.is_finite() {
            return Err(Error::SolverFailure("non-finite terminal misfit".into()));
        }
        if misfit_norm < threshold {
            return Err(Error::DegenerateTarget {
                misfit_norm: misfit_norm.to_f64_lossy(),
                threshold: threshold.to_f64_lossy(),
            });
        }
        let k: T = grid.step();
        let factor = self.ops.factor_step(nu * k)?;
        let mm = grid.intervals();
        let mut adjoint = vec![T::zero(); mm * n];
        let mut bstar_p = vec![T::zero(); mm * nc];
        // p_M = E^{-T} Mass r/|r|, p_{m-1} = E^{-T} Mass p_m
        let mut carry: Vec<T> = terminal_misfit.iter().map(|&r| r / misfit_norm).collect();
        let mut rhs = vec![T::zero(); n];
        let mut ctp = vec![T::zero(); nc];
        let weights = &self.data.weights;
        for m in (0..mm).rev() {
            self.ops.mass_mul(&carry, &mut rhs);
            factor.solve_transpose_in_place(&mut rhs);
            std::mem::swap(&mut carry, &mut rhs);
            adjoint[m * n..(m + 1) * n].copy_from_slice(&carry);
            self.ops.control_tmul(&carry, &mut ctp);
            for (j, b) in bstar_p[m * nc..(m + 1) * nc].iter_mut().enumerate() {
                *b = ctp[j] / weights[j];
            }
        }
        if carry.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure("non-finite adjoint".into()));
        }
        Ok(AdjointData {
            grid,
            control_dim: nc,
            bstar_p,
            terminal_misfit: terminal_misfit.to_vec(),
            misfit_norm,
            adjoint,
        })
    }

    fn hamiltonian_pairing(&self, _nu: T, u: &Control<T>, y: &StateTrajectory<T>, p: &AdjointData<T>) -> Result<T> {
        let grid = u.grid();
        if y.grid() != grid || p.grid() != grid {
            return Err(Error::ConfigError("control, state and adjoint live on different grids".into()));
        }
        let n = self.ops.state_dim();
        let k: T = grid.step();
        let mut ay = vec![T::zero(); n];
        let mut total = T::zero();
        for m in 0..grid.intervals() {
            // <C u_m - A y_m, p_m>; the control part is sum_j w_j u_j (B*p)_j
            self.ops.operator_mul(y.node(m + 1), &mut ay);
            let state_part = dot(&ay, p.adjoint_interval(m));
            let control_part = u
                .interval(m)
                .iter()
                .zip(p.bstar_p_interval(m))
                .zip(&self.data.weights)
                .fold(T::zero(), |s, ((&uj, &bj), &wj)| s + wj * uj * bj);
            total += k * (control_part - state_part);
        }
        Ok(total)
    }
}
