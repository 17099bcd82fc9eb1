use crate::linalg::DenseMatrix;
use crate::Scalar;

/// Euclidean projection onto the probability simplex together with its
/// generalized derivative `D = Gamma (Id + Lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexProjection<T> {
    point: Vec<T>,
    rho: usize,
    /// Indices sorted by decreasing input value.
    order: Vec<usize>,
    shift: T,
    active: Vec<bool>,
}

impl<T: Scalar> SimplexProjection<T> {
    pub fn point(&self) -> &[T] {
        &self.point
    }

    pub fn into_point(self) -> Vec<T> {
        self.point
    }

    /// Number of active (positive) coordinates.
    pub fn rho(&self) -> usize {
        self.rho
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// The shift added to the input before clipping.
    pub fn shift(&self) -> T {
        self.shift
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    /// `D v`: on active coordinates `v_i` minus the mean of `v` over the
    /// active set, zero elsewhere.
    pub fn apply_derivative(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.point.len());
        let mean = self.order[..self.rho].iter().map(|&i| v[i]).sum::<T>() / T::from_usize_lossy(self.rho);
        v.iter().zip(&self.active).map(|(&x, &a)| if a { x - mean } else { T::zero() }).collect()
    }

    pub fn derivative_matrix(&self) -> DenseMatrix<T> {
        let n = self.point.len();
        let inv = T::one() / T::from_usize_lossy(self.rho);
        let mut d = DenseMatrix::zeros(n, n);
        for i in (0..n).filter(|&i| self.active[i]) {
            d[(i, i)] = T::one();
            for &j in &self.order[..self.rho] {
                d[(i, j)] -= inv;
            }
        }
        d
    }
}

/// Projects `y` onto `{x : x >= 0, sum x = 1}` by sorting.
pub fn project_simplex<T: Scalar>(y: &[T]) -> SimplexProjection<T> {
    assert!(!y.is_empty(), "projection onto an empty simplex");
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[b].partial_cmp(&y[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut partial = T::zero();
    let mut rho = 1;
    let mut rho_sum = y[order[0]];
    for (j, &i) in order.iter().enumerate() {
        partial += y[i];
        let count = T::from_usize_lossy(j + 1);
        if y[i] + (T::one() - partial) / count > T::zero() {
            rho = j + 1;
            rho_sum = partial;
        }
    }
    let shift = (T::one() - rho_sum) / T::from_usize_lossy(rho);
    let mut active = vec![false; n];
    for &i in &order[..rho] {
        active[i] = true;
    }
    let point = y
        .iter()
        .zip(&active)
        .map(|(&v, &a)| if a { (v + shift).max(T::zero()) } else { T::zero() })
        .collect();
    SimplexProjection { point, rho, order, shift, active }
}
