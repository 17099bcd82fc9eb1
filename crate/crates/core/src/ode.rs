//! Dense linear ODE systems `y' + A y = B u`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::evolution::{ImplicitEulerOperators, LinearEvolution, ProblemData};
use crate::linalg::{DenseLu, DenseMatrix};
use crate::scalar::dot;
use crate::Scalar;

/// Dynamics matrices of a small dense system; the mass matrix is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperators<T> {
    a: DenseMatrix<T>,
    b: DenseMatrix<T>,
}

impl<T: Scalar> DenseOperators<T> {
    pub fn new(a: DenseMatrix<T>, b: DenseMatrix<T>) -> Result<Self> {
        if a.rows() != a.cols() || b.rows() != a.rows() || b.cols() == 0 {
            return Err(Error::ConfigError(format!(
                "incompatible dimensions: A is {}x{}, B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DenseMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DenseMatrix<T> {
        &self.b
    }
}

impl<T: Scalar> ImplicitEulerOperators<T> for DenseOperators<T> {
    type Factor = DenseLu<T>;

    fn state_dim(&self) -> usize {
        self.a.rows()
    }

    fn control_dim(&self) -> usize {
        self.b.cols()
    }

    fn factor_step(&self, s: T) -> Result<DenseLu<T>> {
        DenseMatrix::identity(self.a.rows()).add_scaled(s, &self.a).lu()
    }

    fn mass_mul(&self, x: &[T], out: &mut [T]) {
        out.copy_from_slice(x);
    }

    fn operator_mul(&self, x: &[T], out: &mut [T]) {
        self.a.mul_vec_into(x, out);
    }

    fn control_mul_add(&self, alpha: T, u: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o += alpha * dot(self.b.row(i), u);
        }
    }

    fn control_tmul(&self, p: &[T], out: &mut [T]) {
        self.b.tmul_vec_into(p, out);
    }
}

/// Dense ODE system with Euclidean state norm and counting measure on the controls.
pub type DenseLinearSystem<T> = LinearEvolution<T, DenseOperators<T>>;

impl<T: Scalar> DenseLinearSystem<T> {
    pub fn dense(
        a: DenseMatrix<T>,
        b: DenseMatrix<T>,
        initial_state: Vec<T>,
        target: Vec<T>,
        radius: T,
        lower: Vec<T>,
        upper: Vec<T>,
    ) -> Result<Self> {
        let ops = DenseOperators::new(a, b)?;
        let weights = vec![T::one(); ops.control_dim()];
        LinearEvolution::new(ops, ProblemData { initial_state, target, radius, lower, upper, weights })
    }
}

/// Optimal time `11 pi / 6` of the pendulum preset (for `delta0 -> 0`).
pub const PENDULUM_OPTIMAL_TIME: f64 = 11.0 * PI / 6.0;

/// Radius of the circle the initial state is placed on.
pub fn pendulum_radius() -> f64 {
    17f64.sqrt()
}

/// Initial state `-r (cos(pi/3 - theta0), sin(pi/3 - theta0)) + (1, 0)`,
/// `theta0 = asin(1 / r)`, `r = sqrt(17)`.
///
/// This is the start of the arc of angle `pi/3` about `(1, 0)` that ends at
/// `(-3, 1)`; from there the arcs of angle `pi` about `(-1, 0)` and `pi/2`
/// about `(1, 0)` reach the origin.
pub fn pendulum_initial_state() -> [f64; 2] {
    let r = pendulum_radius();
    let theta0 = (1.0 / r).asin();
    let phi = PI / 3.0 - theta0;
    [-r * phi.cos() + 1.0, -r * phi.sin()]
}

/// Analytic time-optimal control of the pendulum in physical time `t`.
pub fn pendulum_optimal_control(t: f64) -> f64 {
    if t <= PI / 3.0 {
        1.0
    } else if t <= 4.0 * PI / 3.0 {
        -1.0
    } else {
        1.0
    }
}

/// Linearized pendulum `x'' + x = u`, `|u| <= 1`, steered to the origin.
pub fn pendulum_preset<T: Scalar>() -> DenseLinearSystem<T> {
    pendulum_with_radius(T::lit(1e-6)).expect("pendulum preset is valid")
}

/// The pendulum with another target radius.
pub fn pendulum_with_radius<T: Scalar>(radius: T) -> Result<DenseLinearSystem<T>> {
    let (o, l) = (T::zero(), T::one());
    let a = DenseMatrix::from_rows(&[&[o, -l], &[l, o]]);
    let b = DenseMatrix::from_rows(&[&[o], &[l]]);
    let y0 = pendulum_initial_state().map(T::lit).to_vec();
    DenseLinearSystem::dense(a, b, y0, vec![o, o], radius, vec![-l], vec![l])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{Control, EvolutionSystem, TimeGrid};

    #[test]
    fn preset_matches_construction() {
        let sys = pendulum_preset::<f64>();
        let r = 17f64.sqrt();
        let th = (1.0 / r).asin();
        let y0 = sys.initial_state();
        assert_eq!(y0[0], -r * (PI / 3.0 - th).cos() + 1.0);
        assert_eq!(y0[1], -r * (PI / 3.0 - th).sin());
        assert!((y0[0] - (1.0 - 2.0 - 3f64.sqrt() / 2.0)).abs() < 1e-14);
        assert!((y0[1] - (0.5 - 2.0 * 3f64.sqrt())).abs() < 1e-14);
        assert_eq!(sys.radius(), 1e-6);
        assert_eq!(sys.lower(), &[-1.0]);
        assert_eq!(sys.upper(), &[1.0]);
        assert!((PENDULUM_OPTIMAL_TIME - 5.759586531581287).abs() < 1e-14);
    }

    #[test]
    fn optimal_control_switches_twice() {
        assert_eq!(pendulum_optimal_control(0.0), 1.0);
        assert_eq!(pendulum_optimal_control(PI / 3.0), 1.0);
        assert_eq!(pendulum_optimal_control(PI / 3.0 + 1e-9), -1.0);
        assert_eq!(pendulum_optimal_control(4.0 * PI / 3.0), -1.0);
        assert_eq!(pendulum_optimal_control(4.0 * PI / 3.0 + 1e-9), 1.0);
        assert_eq!(pendulum_optimal_control(PENDULUM_OPTIMAL_TIME), 1.0);
    }

    #[test]
    fn zero_dynamics_stay_at_rest() {
        let (o, l) = (0.0, 1.0);
        let a = DenseMatrix::from_rows(&[&[o, -l], &[l, o]]);
        let b = DenseMatrix::from_rows(&[&[o], &[l]]);
        // y0 = 0 is inside any ball around y_d = 0, so aim elsewhere
        let sys = DenseLinearSystem::dense(a, b, vec![0.0, 0.0], vec![3.0, 0.0], 0.1, vec![-1.0], vec![1.0]).unwrap();
        let g = TimeGrid::new(50).unwrap();
        let u = Control::interpolated(g, vec![-1.0], vec![1.0], 0.5).unwrap();
        let y = sys.solve_state(2.7, &u).unwrap();
        for m in 0..=50 {
            assert_eq!(y.node(m), &[0.0, 0.0]);
        }
    }

    #[test]
    fn trivial_instance_is_rejected() {
        let a = DenseMatrix::from_rows(&[&[0.0]]);
        let b = DenseMatrix::from_rows(&[&[1.0]]);
        let err = DenseLinearSystem::dense(a, b, vec![0.05], vec![0.0], 0.1, vec![-1.0], vec![1.0]);
        assert!(matches!(err, Err(Error::ConfigError(_))));
    }
}
