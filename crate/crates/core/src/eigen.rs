//! Lowest eigenpairs of large real symmetric operators.
//!
//! Lanczos with full reorthogonalization. Ritz values of the tridiagonal
//! projection come from Sturm-sequence bisection and their vectors from
//! inverse iteration, so a convergence check costs O(m) per wanted pair.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Matrix-free symmetric operator.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// y = A·x
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    pub max_iter: usize,
    /// Residual tolerance relative to the operator scale estimate.
    pub rel_tol: f64,
    pub check_every: usize,
    pub seed: u64,
    pub want_vectors: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { max_iter: 1500, rel_tol: 1e-11, check_every: 20, seed: 0x1a2b_3c4d, want_vectors: false }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("Lanczos did not converge after {iterations} iterations (worst residual {residual:.3e})")]
pub struct NotConverged {
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Number of eigenvalues of the tridiagonal (alpha, beta) strictly below x.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0_f64;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        q = alpha[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = f64::EPSILON * (alpha[i].abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// k-th smallest eigenvalue (0-based) of a symmetric tridiagonal matrix.
fn tridiag_eigenvalue(alpha: &[f64], beta: &[f64], k: usize) -> f64 {
    let m = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i + 1 < m { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    let scale = hi.abs().max(lo.abs()).max(1e-300);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(alpha, beta, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvector of the tridiagonal for eigenvalue `theta` by inverse iteration.
fn tridiag_eigenvector(alpha: &[f64], beta: &[f64], theta: f64, seed: u64) -> Vec<f64> {
    let m = alpha.len();
    let scale = alpha.iter().map(|a| a.abs()).fold(1e-300, f64::max);
    let shift = theta + 1e-13 * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() - 0.5).collect();
    for _ in 0..3 {
        // Thomas algorithm with partial safeguards; (T - shift) is nearly singular,
        // which is exactly what inverse iteration wants.
        let mut c = vec![0.0; m];
        let mut d = vec![0.0; m];
        let mut denom = alpha[0] - shift;
        if denom.abs() < 1e-300 {
            denom = 1e-300;
        }
        if m > 1 {
            c[0] = beta[0] / denom;
        }
        d[0] = v[0] / denom;
        for i in 1..m {
            let mut den = alpha[i] - shift - beta[i - 1] * c[i - 1];
            if den.abs() < 1e-300 {
                den = 1e-300;
            }
            if i + 1 < m {
                c[i] = beta[i] / den;
            }
            d[i] = (v[i] - beta[i - 1] * d[i - 1]) / den;
        }
        let mut x = vec![0.0; m];
        x[m - 1] = d[m - 1];
        for i in (0..m - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        let n = norm(&x);
        v = x.into_iter().map(|e| e / n).collect();
    }
    v
}

/// Lowest `k` eigenpairs of `op`.
///
/// `project` is applied to the start vector and to every new Krylov vector; it
/// restricts the iteration to an invariant subspace such as a symmetry sector.
pub fn lowest_eigenpairs<O: SymmetricOperator + ?Sized>(
    op: &O,
    k: usize,
    opts: &LanczosOptions,
    project: Option<&dyn Fn(&mut [f64])>,
) -> Result<EigenResult, NotConverged> {
    let n = op.dim();
    assert!(k >= 1 && k <= n, "requested {k} eigenpairs of a dimension-{n} operator");
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    if let Some(p) = project {
        p(&mut q);
    }
    let nq = norm(&q);
    q.iter_mut().for_each(|e| *e /= nq);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut op_scale = 0.0_f64;
    let mut last_residual = f64::INFINITY;
    let max_iter = opts.max_iter.min(n);

    for j in 0..max_iter {
        op.apply(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        for (i, wi) in w.iter_mut().enumerate() {
            *wi -= a * basis[j][i];
            if j > 0 {
                *wi -= beta[j - 1] * basis[j - 1][i];
            }
        }
        if let Some(p) = project {
            p(&mut w);
        }
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let b = norm(&w);
        op_scale = op_scale.max(a.abs() + b);
        let m = alpha.len();
        let breakdown = b <= 1e-14 * op_scale.max(1e-300);
        let want_check = breakdown || (m >= k && (m % opts.check_every == 0 || m == max_iter));
        if want_check {
            let mut values = Vec::with_capacity(k);
            let mut svecs = Vec::with_capacity(k);
            let mut residuals = Vec::with_capacity(k);
            for idx in 0..k.min(m) {
                let theta = tridiag_eigenvalue(&alpha, &beta, idx);
                let s = tridiag_eigenvector(&alpha, &beta, theta, opts.seed ^ idx as u64);
                residuals.push(if breakdown { 0.0 } else { (b * s[m - 1]).abs() });
                values.push(theta);
                svecs.push(s);
            }
            let worst = residuals.iter().cloned().fold(0.0, f64::max);
            last_residual = worst;
            if values.len() == k && (breakdown || worst <= opts.rel_tol * op_scale) {
                let vectors = if opts.want_vectors {
                    svecs
                        .iter()
                        .map(|s| {
                            let mut y = vec![0.0; n];
                            for (coef, v) in s.iter().zip(&basis) {
                                y.iter_mut().zip(v).for_each(|(yi, vi)| *yi += coef * vi);
                            }
                            y
                        })
                        .collect()
                } else {
                    Vec::new()
                };
                return Ok(EigenResult { values, vectors, residuals, iterations: m });
            }
            if breakdown {
                break;
            }
        }
        beta.push(b);
        basis.push(w.iter().map(|e| e / b).collect());
    }
    Err(NotConverged { iterations: alpha.len(), residual: last_residual })
}

/// Dense symmetric operator, mostly for tests.
pub struct DenseSymmetric {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = dot(&self.data[i * self.n..(i + 1) * self.n], x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Laplacian1d(usize);
    impl SymmetricOperator for Laplacian1d {
        fn dim(&self) -> usize {
            self.0
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            let n = self.0;
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r;
            }
        }
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 400;
        let res = lowest_eigenpairs(&Laplacian1d(n), 3, &LanczosOptions::default(), None).unwrap();
        for (k, v) in res.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-10, "{k}: {v} vs {exact}");
        }
    }

    #[test]
    fn sturm_bisection_matches_dense() {
        let alpha = [2.0, -1.0, 0.5, 3.0];
        let beta = [0.3, 1.2, -0.7];
        let mut m = nalgebra::DMatrix::<f64>::zeros(4, 4);
        for i in 0..4 {
            m[(i, i)] = alpha[i];
        }
        for i in 0..3 {
            m[(i, i + 1)] = beta[i];
            m[(i + 1, i)] = beta[i];
        }
        let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 0..4 {
            assert!((tridiag_eigenvalue(&alpha, &beta, k) - ev[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn vectors_are_eigenvectors() {
        let n = 60;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = (i as f64).sqrt();
            if i + 3 < n {
                data[i * n + i + 3] = 0.4;
                data[(i + 3) * n + i] = 0.4;
            }
        }
        let op = DenseSymmetric { n, data };
        let opts = LanczosOptions { want_vectors: true, ..Default::default() };
        let res = lowest_eigenpairs(&op, 2, &opts, None).unwrap();
        let mut y = vec![0.0; n];
        for (val, vec) in res.values.iter().zip(&res.vectors) {
            op.apply(vec, &mut y);
            let r: f64 = y.iter().zip(vec).map(|(a, b)| (a - val * b).powi(2)).sum::<f64>().sqrt();
            assert!(r < 1e-8);
        }
    }
}
