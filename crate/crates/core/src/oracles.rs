//! Brute-force references for tests. Slow on purpose, and independent of
//! the solver kernels: plain `Vec<Vec<f64>>` arithmetic only.

use std::fmt;

use crate::error::{Error, Result};
use crate::evolution::Control;

type Mat = Vec<Vec<f64>>;

fn zeros(n: usize) -> Mat {
    vec![vec![0.0; n]; n]
}

fn eye(n: usize) -> Mat {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut c = zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

fn lincomb(terms: &[(f64, &Mat)]) -> Mat {
    let n = terms[0].1.len();
    let mut c = zeros(n);
    for &(s, m) in terms {
        for i in 0..n {
            for j in 0..n {
                c[i][j] += s * m[i][j];
            }
        }
    }
    c
}

/// Solves `a x = b` for every column of `b` by Gauss-Jordan with full pivoting.
fn solve_matrix(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut a = a.clone();
    let mut b = b.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (mut pr, mut pc, mut best) = (col, col, -1.0);
        for (r, row) in a.iter().enumerate().skip(col) {
            for (c, v) in row.iter().enumerate().skip(col) {
                if v.abs() > best {
                    best = v.abs();
                    pr = r;
                    pc = c;
                }
            }
        }
        a.swap(col, pr);
        b.swap(col, pr);
        if pc != col {
            for row in a.iter_mut() {
                row.swap(col, pc);
            }
            perm.swap(col, pc);
        }
        let piv = a[col][col];
        for r in 0..n {
            if r != col {
                let f = a[r][col] / piv;
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    for c in 0..b[0].len() {
                        b[r][c] -= f * b[col][c];
                    }
                }
            }
        }
    }
    let mut x = vec![vec![0.0; b[0].len()]; n];
    for r in 0..n {
        for c in 0..b[0].len() {
            x[perm[r]][c] = b[r][c] / a[r][r];
        }
    }
    x
}

fn norm1(a: &Mat) -> f64 {
    let n = a.len();
    (0..n).map(|j| (0..n).map(|i| a[i][j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with the degree-13 Pade
/// approximant.
pub fn expm(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let a: Mat = a.to_vec();
    let n = a.len();
    let nrm = norm1(&a);
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = lincomb(&[(0.5f64.powi(s), &a)]);
    let id = eye(n);
    let a2 = matmul(&a, &a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a4, &a2);
    let u_in = lincomb(&[(B[13], &a6), (B[11], &a4), (B[9], &a2)]);
    let u = matmul(&a, &lincomb(&[(1.0, &matmul(&a6, &u_in)), (B[7], &a6), (B[5], &a4), (B[3], &a2), (B[1], &id)]));
    let v_in = lincomb(&[(B[12], &a6), (B[10], &a4), (B[8], &a2)]);
    let v = lincomb(&[(1.0, &matmul(&a6, &v_in)), (B[6], &a6), (B[4], &a4), (B[2], &a2), (B[0], &id)]);
    let p = lincomb(&[(1.0, &v), (1.0, &u)]);
    let q = lincomb(&[(1.0, &v), (-1.0, &u)]);
    let mut r = solve_matrix(&q, &p);
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    r
}

/// Exact terminal state of `y' = nu (-A y + B u)` on `(0, 1)` for a
/// piecewise-constant control, one augmented exponential per interval.
pub fn expm_trajectory(a: &[Vec<f64>], b: &[Vec<f64>], y0: &[f64], nu: f64, u: &Control<f64>) -> Vec<f64> {
    let n = a.len();
    let grid = u.grid();
    let k = 1.0 / grid.intervals() as f64;
    let mut y = y0.to_vec();
    for m in 0..grid.intervals() {
        let um = u.interval(m);
        // [[-nu k A, nu k B u], [0, 0]]
        let mut aug = zeros(n + 1);
        for i in 0..n {
            for j in 0..n {
                aug[i][j] = -nu * k * a[i][j];
            }
            aug[i][n] = nu * k * b[i].iter().zip(um).map(|(x, v)| x * v).sum::<f64>();
        }
        let e = expm(&aug);
        y = (0..n).map(|i| (0..n).map(|j| e[i][j] * y[j]).sum::<f64>() + e[i][n]).collect();
    }
    y
}

/// Euclidean projection onto the probability simplex by enumerating every
/// nonempty support and keeping the feasible KKT point.
pub fn brute_simplex_qp(y: &[f64]) -> Vec<f64> {
    let m = y.len();
    assert!((1..=16).contains(&m), "brute_simplex_qp supports 1..=16 entries");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let tau = (support.iter().map(|&i| y[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut x = vec![0.0; m];
        for &i in &support {
            x[i] = y[i] - tau;
        }
        if x.iter().any(|&v| v < 0.0) {
            continue;
        }
        let dist: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().map_or(true, |(d, _)| dist < *d) {
            best = Some((dist, x));
        }
    }
    best.expect("some support is feasible").1
}

/// Minimizes `lambda' G lambda` over the simplex by enumerating supports.
pub fn brute_simplex_quadratic(gram: &[Vec<f64>]) -> Vec<f64> {
    let m = gram.len();
    assert!((1..=12).contains(&m), "brute_simplex_quadratic supports 1..=12 atoms");
    let value = |x: &[f64]| -> f64 { (0..m).map(|i| x[i] * (0..m).map(|j| gram[i][j] * x[j]).sum::<f64>()).sum() };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let s: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let p = s.len();
        // [G_SS 1; 1' 0] [x; -mu] = [0; 1]
        let mut kkt = zeros(p + 1);
        for (a, &i) in s.iter().enumerate() {
            for (b, &j) in s.iter().enumerate() {
                kkt[a][b] = gram[i][j];
            }
            kkt[a][p] = 1.0;
            kkt[p][a] = 1.0;
        }
        let mut rhs = vec![vec![0.0]; p + 1];
        rhs[p][0] = 1.0;
        let sol = solve_matrix(&kkt, &rhs);
        if sol.iter().any(|r| !r[0].is_finite()) {
            continue;
        }
        let mut x = vec![0.0; m];
        for (a, &i) in s.iter().enumerate() {
            x[i] = sol[a][0];
        }
        if x.iter().any(|&v| v < -1e-14) {
            continue;
        }
        x.iter_mut().for_each(|v| *v = v.max(0.0));
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
        let f = value(&x);
        if best.as_ref().map_or(true, |(b, _)| f < *b) {
            best = Some((f, x));
        }
    }
    best.map(|b| b.1).unwrap_or_else(|| vec![1.0 / m as f64; m])
}

/// Central difference `(f(x + h) - f(x - h)) / 2h`.
pub fn fd_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Minimizer of a unimodal `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// First crossing of `level` by a sampled, decreasing function on
/// `[lo, hi]`: scanned on a grid of width `width`, then bisected to `1e-6`.
pub fn grid_bisection_root(f: impl Fn(f64) -> f64, level: f64, lo: f64, hi: f64, width: f64) -> Result<f64> {
    let steps = ((hi - lo) / width).ceil().max(1.0) as usize;
    let mut a = lo;
    let mut fa = f(a) - level;
    for i in 1..=steps {
        let b = (lo + i as f64 * width).min(hi);
        let fb = f(b) - level;
        if fa == 0.0 {
            return Ok(a);
        }
        if fa.signum() != fb.signum() {
            let (mut l, mut r) = (a, b);
            while r - l > 1e-6 {
                let mid = 0.5 * (l + r);
                let fm = f(mid) - level;
                if fm.signum() == fa.signum() {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            return Ok(0.5 * (l + r));
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoSignChange { lo, hi })
}

/// One comparison of a solver output against an oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: String,
    pub digest: String,
    pub reference: f64,
    pub target: f64,
    pub abs_error: f64,
    pub rel_error: f64,
}

impl OracleReport {
    pub fn new(name: impl Into<String>, digest: impl Into<String>, reference: f64, target: f64) -> Self {
        let abs_error = (reference - target).abs();
        let rel_error = if reference != 0.0 { abs_error / reference.abs() } else { abs_error };
        Self { name: name.into(), digest: digest.into(), reference, target, abs_error, rel_error }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "oracle {} [{}] reference={:.12e} target={:.12e} abs={:.3e} rel={:.3e}",
            self.name, self.digest, self.reference, self.target, self.abs_error, self.rel_error
        )
    }
}
