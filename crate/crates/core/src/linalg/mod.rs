//! Linear algebra kernels used by the time steppers.
//!
//! Everything here is small and specialised: dense LU for the ODE backend,
//! a banded Cholesky factorization for the finite element pencils on the
//! uniform mesh, and a CSR matrix for mass and stiffness products.

mod banded;
mod dense;
mod sparse;

pub use banded::BandCholesky;
pub use dense::{DenseLu, DenseMatrix};
pub use sparse::{CsrMatrix, TripletBuilder};

use crate::Scalar;

/// Factorized operator that can solve with itself and its transpose.
pub trait LinearSolve<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn solve_in_place(&self, rhs: &mut [T]);
    fn solve_transpose_in_place(&self, rhs: &mut [T]);
}
