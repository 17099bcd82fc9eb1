use crate::cg::{
    cg_direction, direction_pattern, duality_gap, exact_linesearch, ssn_combination, ssn_combination_squared, CgOptions, HullObjective,
};
use crate::error::{Error, Result};
use crate::evolution::{sub, AdjointData, Control, EvolutionSystem};
use crate::linalg::DenseMatrix;
use crate::scalar::{axpy, dot};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceFlag {
    /// The duality gap fell below `tol_gap`.
    Converged,
    /// `max_iter` was reached; the last (best) iterate is returned.
    Incomplete,
    /// `f(u_n)` fell below `cutoff`; only an upper bound on the value is known.
    BelowCutoff,
    /// The terminal state hit `y_d`; the adjoint is undefined and set to zero.
    TargetReached,
}

/// One row of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgIterate<T> {
    pub iter: usize,
    /// `f(u_n) = |y_n(1) - y_d| - delta0`
    pub objective: T,
    pub gap: T,
    /// Size of the convex-combination history (1 without acceleration).
    pub atoms: usize,
}

/// Result of one inner solve at a fixed horizon.
#[derive(Debug, Clone)]
pub struct DistanceSolution<T> {
    pub nu: T,
    pub control: Control<T>,
    pub terminal: Vec<T>,
    pub misfit_norm: T,
    /// `misfit_norm - delta0`
    pub delta: T,
    pub gap: T,
    pub iterations: usize,
    pub status: ConvergenceFlag,
    /// Adjoint at the returned control.
    pub adjoint: AdjointData<T>,
    pub log: Vec<CgIterate<T>>,
    pub state_solves: usize,
    pub adjoint_solves: usize,
    /// Iterations where the fully corrective step fell back to the line search.
    pub acceleration_fallbacks: usize,
    /// Semi-smooth Newton iterations summed over all fully corrective steps.
    pub ssn_iterations: usize,
}

impl<T: Scalar> DistanceSolution<T> {
    pub fn bstar_p(&self) -> &[T] {
        self.adjoint.bstar_p()
    }

    /// True if the returned value is optimal to within `tol_gap`.
    pub fn converged(&self) -> bool {
        matches!(self.status, ConvergenceFlag::Converged | ConvergenceFlag::TargetReached)
    }
}

#[derive(Debug, Clone)]
enum AtomControl<T> {
    /// Box vertex from the direction rule: -1 lower, +1 upper, 0 midpoint.
    Vertex(Vec<i8>),
    Dense(Vec<T>),
}

#[derive(Debug, Clone)]
struct Atom<T> {
    control: AtomControl<T>,
    misfit: Vec<T>,
    riesz: Vec<T>,
}

impl<T: Scalar> Atom<T> {
    fn add_control_to(&self, coeff: T, lower: &[T], upper: &[T], out: &mut [T]) {
        match &self.control {
            AtomControl::Dense(v) => axpy(coeff, v, out),
            AtomControl::Vertex(pattern) => {
                let n_c = lower.len();
                for (i, (o, &s)) in out.iter_mut().zip(pattern).enumerate() {
                    let j = i % n_c;
                    let v = match s {
                        -1 => lower[j],
                        1 => upper[j],
                        _ => (lower[j] + upper[j]) * T::lit(0.5),
                    };
                    *o += coeff * v;
                }
            }
        }
    }
}

/// Convex-combination history of the fully corrective variant.
struct History<T> {
    atoms: Vec<Atom<T>>,
    coeffs: Vec<T>,
    gram: Vec<Vec<T>>,
}

impl<T: Scalar> History<T> {
    fn new(first: Atom<T>) -> Self {
        let g = dot(&first.riesz, &first.misfit);
        Self { atoms: vec![first], coeffs: vec![T::one()], gram: vec![vec![g]] }
    }

    fn push(&mut self, atom: Atom<T>) {
        let row: Vec<T> = self.atoms.iter().map(|a| dot(&atom.riesz, &a.misfit)).collect();
        let diag = dot(&atom.riesz, &atom.misfit);
        for (g, &v) in self.gram.iter_mut().zip(&row) {
            g.push(v);
        }
        let mut row = row;
        row.push(diag);
        self.gram.push(row);
        self.atoms.push(atom);
        self.coeffs.push(T::zero());
    }

    fn objective(&self) -> HullObjective<'_, T> {
        let m = self.atoms.len();
        let gram = DenseMatrix::from_row_major(m, m, self.gram.iter().flatten().copied().collect());
        HullObjective::new(
            self.atoms.iter().map(|a| a.misfit.as_slice()).collect(),
            self.atoms.iter().map(|a| a.riesz.as_slice()).collect(),
            gram,
        )
    }

    /// Folds atoms with weight below `threshold`, and the smallest ones
    /// beyond `cap`, into the heaviest atom. The represented iterate is
    /// unchanged.
    fn compress(&mut self, threshold: T, cap: usize, lower: &[T], upper: &[T]) {
        let m = self.atoms.len();
        let heaviest = (0..m).fold(0, |b, i| if self.coeffs[i] > self.coeffs[b] { i } else { b });
        let mut drop = vec![false; m];
        for i in 0..m {
            drop[i] = i != heaviest && self.coeffs[i] < threshold;
        }
        let kept = drop.iter().filter(|d| !**d).count();
        if kept > cap {
            let mut by_weight: Vec<usize> = (0..m).filter(|&i| !drop[i] && i != heaviest).collect();
            by_weight.sort_by(|&a, &b| self.coeffs[a].partial_cmp(&self.coeffs[b]).unwrap_or(std::cmp::Ordering::Equal));
            for &i in by_weight.iter().take(kept - cap) {
                drop[i] = true;
            }
        }
        if !drop.iter().any(|&d| d) {
            return;
        }
        let folded: T = (0..m).filter(|&i| drop[i]).map(|i| self.coeffs[i]).sum();
        if folded > T::zero() {
            let total = self.coeffs[heaviest] + folded;
            let nv = match &self.atoms[heaviest].control {
                AtomControl::Dense(v) => v.len(),
                AtomControl::Vertex(p) => p.len(),
            };
            let n = self.atoms[heaviest].misfit.len();
            let (mut control, mut misfit, mut riesz) = (vec![T::zero(); nv], vec![T::zero(); n], vec![T::zero(); n]);
            for i in (0..m).filter(|&i| drop[i] || i == heaviest) {
                let w = self.coeffs[i] / total;
                let a = &self.atoms[i];
                a.add_control_to(w, lower, upper, &mut control);
                axpy(w, &a.misfit, &mut misfit);
                axpy(w, &a.riesz, &mut riesz);
            }
            self.atoms[heaviest] = Atom { control: AtomControl::Dense(control), misfit, riesz };
            self.coeffs[heaviest] = total;
        }
        let keep: Vec<usize> = (0..m).filter(|&i| !drop[i]).collect();
        self.atoms = keep.iter().map(|&i| self.atoms[i].clone()).collect();
        self.coeffs = keep.iter().map(|&i| self.coeffs[i]).collect();
        let sum: T = self.coeffs.iter().copied().sum();
        self.coeffs.iter_mut().for_each(|c| *c = *c / sum);
        self.gram = self
            .atoms
            .iter()
            .map(|a| self.atoms.iter().map(|b| dot(&a.riesz, &b.misfit)).collect())
            .collect();
    }

    fn control(&self, len: usize, lower: &[T], upper: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); len];
        for (a, &c) in self.atoms.iter().zip(&self.coeffs) {
            if c != T::zero() {
                a.add_control_to(c, lower, upper, &mut out);
            }
        }
        // clip round-off so the iterate stays inside the box
        let n_c = lower.len();
        for (i, v) in out.iter_mut().enumerate() {
            *v = v.max(lower[i % n_c]).min(upper[i % n_c]);
        }
        out
    }

    fn misfit(&self) -> Vec<T> {
        let mut r = vec![T::zero(); self.atoms[0].misfit.len()];
        for (a, &c) in self.atoms.iter().zip(&self.coeffs) {
            if c != T::zero() {
                axpy(c, &a.misfit, &mut r);
            }
        }
        r
    }
}

/// Conditional gradient method for `min_u |y(1) - y_d|` at horizon `nu`,
/// started from the feasible control `u0`.
pub fn cg_solve<T: Scalar, S: EvolutionSystem<T> + ?Sized>(
    system: &S,
    nu: T,
    u0: &Control<T>,
    opts: &CgOptions<T>,
) -> Result<DistanceSolution<T>> {
    opts.validate()?;
    if !u0.is_feasible() {
        return Err(Error::ConfigError("initial control is infeasible".into()));
    }
    let grid = u0.grid();
    let (lower, upper) = (system.lower(), system.upper());
    let weights = system.control_weights();
    let radius = system.radius();
    let inner = |a: &[T], b: &[T]| system.h_inner(a, b);

    let mut u = u0.clone();
    let mut r = sub(&system.solve_terminal(nu, &u)?, system.target());
    let mut state_solves = 1;
    let mut adjoint_solves = 0;
    let mut fallbacks = 0;
    let mut ssn_iterations = 0;
    let mut history = opts.accelerate.then(|| {
        let riesz = system.h_riesz(&r);
        History::new(Atom { control: AtomControl::Dense(u.values().to_vec()), misfit: r.clone(), riesz })
    });
    let mut log = Vec::new();

    let mut n = 0;
    loop {
        let (adjoint, degenerate) = match system.solve_adjoint(nu, grid, &r) {
            Ok(a) => (a, false),
            Err(Error::DegenerateTarget { .. }) => {
                let norm = system.h_norm(&r);
                (AdjointData::vanishing(grid, system.control_dim(), r.clone(), norm), true)
            }
            Err(e) => return Err(e),
        };
        adjoint_solves += 1;
        let misfit_norm = adjoint.misfit_norm();
        let u_half = cg_direction(adjoint.bstar_p(), lower, upper);
        let gap = if degenerate { T::zero() } else { duality_gap(nu, grid, adjoint.bstar_p(), u.values(), &u_half, weights) };
        let atoms = history.as_ref().map_or(1, |h| h.atoms.len());
        log.push(CgIterate { iter: n, objective: misfit_norm - radius, gap, atoms });

        let status = if degenerate {
            Some(ConvergenceFlag::TargetReached)
        } else if opts.cutoff.is_some_and(|c| misfit_norm - radius < c) {
            Some(ConvergenceFlag::BelowCutoff)
        } else if gap < opts.tol_gap {
            Some(ConvergenceFlag::Converged)
        } else if n >= opts.max_iter {
            Some(ConvergenceFlag::Incomplete)
        } else {
            None
        };
        if let Some(status) = status {
            let terminal = r.iter().zip(system.target()).map(|(&a, &b)| a + b).collect();
            return Ok(DistanceSolution {
                nu,
                control: u,
                terminal,
                misfit_norm,
                delta: misfit_norm - radius,
                gap,
                iterations: n,
                status,
                adjoint,
                log,
                state_solves,
                adjoint_solves,
                acceleration_fallbacks: fallbacks,
                ssn_iterations,
            });
        }

        let pattern = direction_pattern(adjoint.bstar_p());
        let vertex = u.with_values(u_half);
        let d_half = sub(&system.solve_terminal(nu, &vertex)?, system.target());
        state_solves += 1;
        let step_dir = sub(&d_half, &r);
        let t = exact_linesearch(&r, &step_dir, inner);

        match history.as_mut() {
            None => {
                let mut values = u.values().to_vec();
                for (x, &v) in values.iter_mut().zip(vertex.values()) {
                    *x = *x + t * (v - *x);
                }
                let n_c = lower.len();
                for (i, x) in values.iter_mut().enumerate() {
                    *x = x.max(lower[i % n_c]).min(upper[i % n_c]);
                }
                u = u.with_values(values);
                axpy(t, &step_dir, &mut r);
            }
            Some(hist) => {
                let riesz = system.h_riesz(&d_half);
                hist.push(Atom { control: AtomControl::Vertex(pattern), misfit: d_half, riesz });
                let m = hist.atoms.len();
                let mut standard: Vec<T> = hist.coeffs.iter().map(|&c| c * (T::one() - t)).collect();
                standard[m - 1] = t;
                let objective = hist.objective();
                let standard_value = objective.value(&standard);
                let mut eta0 = hist.coeffs.clone();
                eta0[m - 1] = T::zero();
                let outcome = match ssn_combination(&objective, &eta0, opts) {
                    // h is not differentiable where the hull reaches the target
                    Err(Error::AccelerationFailure { .. }) => ssn_combination_squared(&objective, &eta0, opts),
                    other => other,
                };
                if let Ok(out) = &outcome {
                    ssn_iterations += out.iterations;
                }
                let lambda = match outcome {
                    Ok(out) if out.value <= standard_value => out.lambda,
                    Ok(_) => standard,
                    Err(Error::AccelerationFailure { .. }) => {
                        fallbacks += 1;
                        standard
                    }
                    Err(e) => return Err(e),
                };
                drop(objective);
                hist.coeffs = lambda;
                hist.compress(opts.prune_threshold, opts.history_cap, lower, upper);
                u = u.with_values(hist.control(u.values().len(), lower, upper));
                r = hist.misfit();
            }
        }
        n += 1;
    }
}
