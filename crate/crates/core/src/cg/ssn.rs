use crate::cg::{project_simplex, CgOptions, SimplexProjection};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LinearSolve};
use crate::scalar::{axpy, dot, norm2};
use crate::Scalar;

/// `h(lambda) = |sum_i lambda_i d_i|_H` over the misfits `d_i = y_i(1) - y_d`
/// of the history atoms.
///
/// `riesz[i]` is the Gram operator of `H` applied to `d_i`, so that
/// `<d_i, r>_H = dot(riesz[i], r)`; `gram[i][j] = <d_i, d_j>_H`.
#[derive(Debug, Clone)]
pub struct HullObjective<'a, T> {
    misfits: Vec<&'a [T]>,
    riesz: Vec<&'a [T]>,
    gram: DenseMatrix<T>,
}

impl<'a, T: Scalar> HullObjective<'a, T> {
    pub fn new(misfits: Vec<&'a [T]>, riesz: Vec<&'a [T]>, gram: DenseMatrix<T>) -> Self {
        assert_eq!(misfits.len(), riesz.len());
        assert_eq!(gram.rows(), misfits.len());
        Self { misfits, riesz, gram }
    }

    /// Euclidean inner product.
    pub fn euclidean(misfits: Vec<&'a [T]>) -> Self {
        let m = misfits.len();
        let mut gram = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] = dot(misfits[i], misfits[j]);
            }
        }
        Self { riesz: misfits.clone(), misfits, gram }
    }

    pub fn len(&self) -> usize {
        self.misfits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.misfits.is_empty()
    }

    /// `(r, Mass r)` for `r = sum lambda_i d_i`.
    fn residual(&self, lambda: &[T]) -> (Vec<T>, Vec<T>) {
        let n = self.misfits[0].len();
        let (mut r, mut mr) = (vec![T::zero(); n], vec![T::zero(); n]);
        for (i, &l) in lambda.iter().enumerate() {
            if l != T::zero() {
                axpy(l, self.misfits[i], &mut r);
                axpy(l, self.riesz[i], &mut mr);
            }
        }
        (r, mr)
    }

    pub fn value(&self, lambda: &[T]) -> T {
        let (r, mr) = self.residual(lambda);
        dot(&r, &mr).max(T::zero()).sqrt()
    }

    /// `|r|_H` and `<d_i, r>_H` from the Gram matrix, at a cost independent
    /// of the state dimension.
    fn inner_products(&self, lambda: &[T]) -> (T, Vec<T>) {
        let m = self.len();
        let mut ip = vec![T::zero(); m];
        for (j, &l) in lambda.iter().enumerate() {
            if l != T::zero() {
                for (i, v) in ip.iter_mut().enumerate() {
                    *v += self.gram[(i, j)] * l;
                }
            }
        }
        let h = dot(lambda, &ip).max(T::zero()).sqrt();
        (h, ip)
    }

    /// Value and gradient `<d_i, r>_H / |r|_H`.
    pub fn value_and_gradient(&self, lambda: &[T]) -> (T, Vec<T>) {
        let (h, ip) = self.inner_products(lambda);
        (h, ip.into_iter().map(|x| x / h).collect())
    }

    /// `(G - g g^T) / h`.
    pub fn hessian(&self, h: T, grad: &[T]) -> DenseMatrix<T> {
        let m = self.len();
        let mut hess = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                hess[(i, j)] = (self.gram[(i, j)] - grad[i] * grad[j]) / h;
            }
        }
        hess
    }
}

/// Result of a semi-smooth Newton solve on the normal map.
#[derive(Debug, Clone, PartialEq)]
pub struct SsnOutcome<T> {
    /// Optimal convex weights `Pi(eta)`.
    pub lambda: Vec<T>,
    pub eta: Vec<T>,
    pub iterations: usize,
    /// Final `|G(eta)|`.
    pub residual: T,
    pub value: T,
}

/// Minimizes `h` over the probability simplex by a semi-smooth Newton
/// method on `G(eta) = c (eta - Pi(eta)) + grad h(Pi(eta))`.
///
/// `eta0` seeds the iteration. A singular Newton matrix is replaced by one
/// projected gradient step `eta = lambda - grad h / c`.
pub fn ssn_combination<T: Scalar>(
    objective: &HullObjective<'_, T>,
    eta0: &[T],
    opts: &CgOptions<T>,
) -> Result<SsnOutcome<T>> {
    ssn_normal_map(objective, eta0, opts, false)
}

/// Same iteration for `h^2`, which has the minimizers of `h` but stays
/// smooth when the hull contains the target (`min h = 0`).
pub fn ssn_combination_squared<T: Scalar>(
    objective: &HullObjective<'_, T>,
    eta0: &[T],
    opts: &CgOptions<T>,
) -> Result<SsnOutcome<T>> {
    ssn_normal_map(objective, eta0, opts, true)
}

fn ssn_normal_map<T: Scalar>(
    objective: &HullObjective<'_, T>,
    eta0: &[T],
    opts: &CgOptions<T>,
    squared: bool,
) -> Result<SsnOutcome<T>> {
    let m = objective.len();
    assert_eq!(eta0.len(), m);
    let c = opts.ssn_c;
    let two = T::lit(2.0);
    let eval = |eta: &[T]| {
        let proj = project_simplex(eta);
        let (h, grad) = if squared {
            let (h, ip) = objective.inner_products(proj.point());
            (h, ip.into_iter().map(|x| two * x).collect::<Vec<T>>())
        } else {
            objective.value_and_gradient(proj.point())
        };
        let g: Vec<T> = (0..m).map(|i| c * (eta[i] - proj.point()[i]) + grad[i]).collect();
        (proj, h, grad, g)
    };
    let mut eta = eta0.to_vec();
    let (mut proj, mut h, mut grad, mut g) = eval(&eta);
    let round_off = T::lit(4.0) * T::epsilon();
    for it in 0..opts.ssn_max_iter {
        let res = norm2(&g);
        if !h.is_finite() || !res.is_finite() {
            return Err(Error::AccelerationFailure { iterations: it, residual: f64::NAN });
        }
        if res <= opts.ssn_tol {
            return Ok(SsnOutcome { value: objective.value(proj.point()), lambda: proj.into_point(), eta, iterations: it, residual: res });
        }
        let step = newton_step(objective, &proj, h, &grad, &g, c, squared, res);
        let mut accepted = false;
        if let Some(xi) = step.filter(|xi| xi.iter().all(|x| x.is_finite())) {
            let scale = eta.iter().fold(T::one(), |s, x| s.max(x.abs()));
            if xi.iter().all(|x| x.abs() <= round_off * scale) {
                // Newton correction below round-off: converged as far as arithmetic allows
                return Ok(SsnOutcome { value: objective.value(proj.point()), lambda: proj.into_point(), eta, iterations: it, residual: res });
            }
            let mut t = T::one();
            for _ in 0..30 {
                let trial: Vec<T> = eta.iter().zip(&xi).map(|(&e, &x)| e - t * x).collect();
                let next = eval(&trial);
                if norm2(&next.3) < res {
                    eta = trial;
                    (proj, h, grad, g) = next;
                    accepted = true;
                    break;
                }
                t = t * T::lit(0.5);
            }
        }
        if !accepted {
            // projected gradient step
            eta = proj.point().iter().zip(&grad).map(|(&l, &gr)| l - gr / c).collect();
            (proj, h, grad, g) = eval(&eta);
        }
    }
    let res = norm2(&g);
    if res <= opts.ssn_tol {
        return Ok(SsnOutcome { value: objective.value(proj.point()), lambda: proj.into_point(), eta, iterations: opts.ssn_max_iter, residual: res });
    }
    Err(Error::AccelerationFailure { iterations: opts.ssn_max_iter, residual: res.to_f64_lossy() })
}

/// Solves `(c (Id - D) + (hess + mu Id) D) xi = g`.
///
/// With `D` zero outside the active set the matrix is block lower
/// triangular: a `rho x rho` solve on the active coordinates, then
/// `xi_I = (g_I - hess_IA D xi_A) / c`. `mu` keeps the active block regular
/// when the active atoms are affinely dependent. It carries a term
/// proportional to `|G|`, so steps far from the solution are damped while
/// the local rate is kept.
fn newton_step<T: Scalar>(
    objective: &HullObjective<'_, T>,
    proj: &SimplexProjection<T>,
    h: T,
    grad: &[T],
    g: &[T],
    c: T,
    squared: bool,
    res: T,
) -> Option<Vec<T>> {
    let m = objective.len();
    let active: Vec<usize> = (0..m).filter(|&i| proj.is_active(i)).collect();
    let rho = active.len();
    let two = T::lit(2.0);
    let hess = |i: usize, j: usize| {
        if squared {
            two * objective.gram[(i, j)]
        } else {
            (objective.gram[(i, j)] - grad[i] * grad[j]) / h
        }
    };
    let inv = T::one() / T::from_usize_lossy(rho);
    // hess_AA D_AA, with D_AA = Id - 1 1^T / rho
    let mut hd = DenseMatrix::zeros(rho, rho);
    let mut norm = T::zero();
    for (a, &i) in active.iter().enumerate() {
        let row: Vec<T> = active.iter().map(|&j| hess(i, j)).collect();
        norm = norm.max(row.iter().fold(T::zero(), |s, x| s + x.abs()));
        let mean = row.iter().copied().sum::<T>() * inv;
        for b in 0..rho {
            hd[(a, b)] = row[b] - mean;
        }
    }
    let mu = T::lit(1e-10) * (c + norm) + res.min(c);
    let mut jac = DenseMatrix::zeros(rho, rho);
    for a in 0..rho {
        for b in 0..rho {
            // c (Id - D) = c / rho on the active block
            let mut v = c * inv + hd[(a, b)] - mu * inv;
            if a == b {
                v += mu;
            }
            jac[(a, b)] = v;
        }
    }
    let lu = jac.lu().ok()?;
    let mut xi_a: Vec<T> = active.iter().map(|&i| g[i]).collect();
    lu.solve_in_place(&mut xi_a);
    let mean = xi_a.iter().copied().sum::<T>() * inv;
    let dxi: Vec<T> = xi_a.iter().map(|&x| x - mean).collect();
    let mut xi = vec![T::zero(); m];
    for (a, &i) in active.iter().enumerate() {
        xi[i] = xi_a[a];
    }
    for i in (0..m).filter(|&i| !proj.is_active(i)) {
        let coupling = active.iter().zip(&dxi).fold(T::zero(), |s, (&j, &d)| s + hess(i, j) * d);
        xi[i] = (g[i] - coupling) / c;
    }
    Some(xi)
}

/// Best convex combination of `terminals` towards `target` in the
/// Euclidean norm, started from the barycenter.
pub fn ssn_combination_euclidean<T: Scalar>(terminals: &[&[T]], target: &[T], opts: &CgOptions<T>) -> Result<SsnOutcome<T>> {
    let misfits: Vec<Vec<T>> = terminals.iter().map(|t| t.iter().zip(target).map(|(&a, &b)| a - b).collect()).collect();
    let objective = HullObjective::euclidean(misfits.iter().map(Vec::as_slice).collect());
    let m = terminals.len();
    let eta0 = vec![T::one() / T::from_usize_lossy(m); m];
    ssn_combination(&objective, &eta0, opts)
}
