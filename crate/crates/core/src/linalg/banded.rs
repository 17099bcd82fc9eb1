use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, LinearSolve};
use crate::scalar::{axpy, dot};
use crate::Scalar;

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite band matrix.
///
/// Row `i` of `L` is stored contiguously for columns `i - bw ..= i`; rows
/// closer than `bw` to the top are zero padded so every product runs over a
/// plain slice.
#[derive(Debug, Clone)]
pub struct BandCholesky<T> {
    n: usize,
    bw: usize,
    band: Vec<T>,
}

impl<T: Scalar> BandCholesky<T> {
    /// Factors `sum_k alpha_k A_k`, reading only the lower triangles.
    pub fn factor_combination(terms: &[(T, &CsrMatrix<T>)]) -> Result<Self> {
        let n = terms.first().map_or(0, |(_, a)| a.rows());
        let mut bw = 0;
        for (_, a) in terms {
            if a.rows() != n || a.cols() != n {
                return Err(Error::SolverFailure("band factorization needs square operands of one size".into()));
            }
            bw = bw.max(a.lower_bandwidth());
        }
        let w = bw + 1;
        let mut band = vec![T::zero(); n * w];
        for (alpha, a) in terms {
            for i in 0..n {
                for (j, v) in a.row_entries(i) {
                    if j <= i {
                        band[i * w + (j + bw - i)] += *alpha * v;
                    }
                }
            }
        }
        Self::factor_band(n, bw, band)
    }

    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        Self::factor_combination(&[(T::one(), a)])
    }

    fn factor_band(n: usize, bw: usize, mut band: Vec<T>) -> Result<Self> {
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let (ri, rj) = (i * w, j * w);
                // columns lo..j of rows i and j
                let si = ri + (lo + bw - i);
                let sj = rj + (lo + bw - j);
                let len = j - lo;
                let s = band[ri + (j + bw - i)] - dot(&band[si..si + len], &band[sj..sj + len]);
                if j < i {
                    band[ri + (j + bw - i)] = s / band[rj + bw];
                } else {
                    if !(s > T::zero()) || !s.is_finite() {
                        return Err(Error::SolverFailure(format!(
                            "matrix not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    band[ri + bw] = s.sqrt();
                }
            }
        }
        Ok(Self { n, bw, band })
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }
}

impl<T: Scalar> LinearSolve<T> for BandCholesky<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn solve_in_place(&self, x: &mut [T]) {
        assert_eq!(x.len(), self.n);
        let (bw, w) = (self.bw, self.bw + 1);
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let row = &self.band[i * w + (lo + bw - i)..i * w + bw];
            let s = x[i] - dot(row, &x[lo..i]);
            x[i] = s / self.band[i * w + bw];
        }
        for i in (0..self.n).rev() {
            let xi = x[i] / self.band[i * w + bw];
            x[i] = xi;
            let lo = i.saturating_sub(bw);
            let row = &self.band[i * w + (lo + bw - i)..i * w + bw];
            axpy(-xi, row, &mut x[lo..i]);
        }
    }

    fn solve_transpose_in_place(&self, rhs: &mut [T]) {
        self.solve_in_place(rhs);
    }
}
