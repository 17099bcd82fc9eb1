//! Conditional gradient method for the minimal-distance problem at a fixed
//! horizon, with an optional fully corrective variant that re-optimizes
//! over the convex hull of past iterates.

mod simplex;
mod solver;
mod ssn;

pub use simplex::{project_simplex, SimplexProjection};
pub use solver::{cg_solve, CgIterate, ConvergenceFlag, DistanceSolution};
pub use ssn::{ssn_combination, ssn_combination_euclidean, ssn_combination_squared, HullObjective, SsnOutcome};

use crate::error::{Error, Result};
use crate::evolution::TimeGrid;
use crate::Scalar;

/// Inner solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions<T> {
    /// Absolute duality gap at which the iteration stops.
    pub tol_gap: T,
    pub max_iter: usize,
    /// Fully corrective steps over the history of iterates.
    pub accelerate: bool,
    pub history_cap: usize,
    /// Atoms whose convex weight falls below this are folded away.
    pub prune_threshold: T,
    /// Scaling `c` of the normal map.
    pub ssn_c: T,
    pub ssn_tol: T,
    pub ssn_max_iter: usize,
    /// Stop as soon as `f(u_n)` drops below this level.
    pub cutoff: Option<T>,
}

impl<T: Scalar> CgOptions<T> {
    /// Defaults with `tol_gap = 1e-9 (1 + delta0)`.
    pub fn for_radius(delta0: T) -> Self {
        Self {
            tol_gap: T::lit(1e-9) * (T::one() + delta0),
            max_iter: 5000,
            accelerate: true,
            history_cap: 50,
            prune_threshold: T::lit(1e-8),
            ssn_c: T::one(),
            ssn_tol: T::lit(1e-11),
            ssn_max_iter: 100,
            cutoff: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_gap > T::zero()) {
            return Err(Error::ConfigError("tol_gap must be positive".into()));
        }
        if self.history_cap < 2 {
            return Err(Error::ConfigError("history_cap must be at least 2".into()));
        }
        if !(self.prune_threshold >= T::zero() && self.prune_threshold < T::one()) {
            return Err(Error::ConfigError("prune_threshold must lie in [0, 1)".into()));
        }
        if !(self.ssn_c > T::zero()) {
            return Err(Error::ConfigError("ssn_c must be positive".into()));
        }
        if !(self.ssn_tol > T::zero()) {
            return Err(Error::ConfigError("ssn_tol must be positive".into()));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for CgOptions<T> {
    fn default() -> Self {
        Self::for_radius(T::zero())
    }
}

/// Minimizer of the linearized objective over the box: `lower` where
/// `B*p > 0`, `upper` where `B*p < 0`, the midpoint where it is exactly zero.
pub fn cg_direction<T: Scalar>(bstar_p: &[T], lower: &[T], upper: &[T]) -> Vec<T> {
    let n_c = lower.len();
    bstar_p
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let j = i % n_c;
            if b > T::zero() {
                lower[j]
            } else if b < T::zero() {
                upper[j]
            } else {
                (lower[j] + upper[j]) * T::lit(0.5)
            }
        })
        .collect()
}

/// Sign pattern of [`cg_direction`]: -1 lower, +1 upper, 0 midpoint.
pub(crate) fn direction_pattern<T: Scalar>(bstar_p: &[T]) -> Vec<i8> {
    bstar_p
        .iter()
        .map(|&b| if b > T::zero() { -1 } else if b < T::zero() { 1 } else { 0 })
        .collect()
}

/// `argmin_{0 <= lambda <= 1} |a + lambda b|` in the given inner product.
pub fn exact_linesearch<T: Scalar>(a: &[T], b: &[T], inner: impl Fn(&[T], &[T]) -> T) -> T {
    let bb = inner(b, b);
    if !(bb > T::zero()) {
        return T::zero();
    }
    (-inner(a, b) / bb).max(T::zero()).min(T::one())
}

/// `f'(u)(u - u_half) = nu k sum_m sum_j w_j (B*p)[m][j] (u - u_half)[m][j]`.
pub fn duality_gap<T: Scalar>(nu: T, grid: TimeGrid, bstar_p: &[T], u: &[T], u_half: &[T], weights: &[T]) -> T {
    let n_c = weights.len();
    let k: T = grid.step();
    let mut total = T::zero();
    for ((b, x), y) in bstar_p.chunks_exact(n_c).zip(u.chunks_exact(n_c)).zip(u_half.chunks_exact(n_c)) {
        for j in 0..n_c {
            total += weights[j] * b[j] * (x[j] - y[j]);
        }
    }
    nu * k * total
}
