//! Lowest eigenpairs of a real symmetric tridiagonal matrix by Sturm-sequence
//! bisection followed by inverse iteration.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e.len() == d.len() − 1`).
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert!(!d.is_empty() && e.len() + 1 == d.len());
        Self { d, e }
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.d.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    pub fn norm_estimate(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    /// Number of eigenvalues strictly less than `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt() * (1.0 + self.norm_estimate());
        let mut count = 0;
        let mut q = self.d[0] - x;
        for i in 0..self.d.len() {
            if i > 0 {
                let e = self.e[i - 1];
                q = self.d[i] - x - e * e / q;
            }
            if q.abs() < tiny {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based), bisected to working precision.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let pad = f64::EPSILON * (lo.abs() + hi.abs()) + f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * (lo.abs().max(hi.abs())) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// `y ← (T − σ) x` residual norm for a candidate pair.
    pub fn residual(&self, sigma: f64, x: &[f64]) -> f64 {
        let n = self.d.len();
        let mut acc = 0.0;
        for i in 0..n {
            let mut v = (self.d[i] - sigma) * x[i];
            if i > 0 {
                v += self.e[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.e[i] * x[i + 1];
            }
            acc += v * v;
        }
        acc.sqrt()
    }

    /// Solves `(T − σ I) y = b` by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        // rows hold (diag, super, super2) after elimination
        let mut diag: Vec<f64> = self.d.iter().map(|d| d - sigma).collect();
        let mut sup: Vec<f64> = self.e.clone();
        sup.push(0.0);
        let mut sup2 = vec![0.0; n];
        let mut sub: Vec<f64> = self.e.clone();
        let mut rhs = b.to_vec();
        let eps = f64::EPSILON * self.norm_estimate().max(f64::MIN_POSITIVE);
        for i in 0..n.saturating_sub(1) {
            if sub[i].abs() > diag[i].abs() {
                // swap rows i and i+1
                std::mem::swap(&mut diag[i], &mut sub[i]);
                let next_diag = diag[i + 1];
                diag[i + 1] = sup[i];
                sup[i] = next_diag;
                let next_sup = sup[i + 1];
                sup[i + 1] = 0.0;
                sup2[i] = next_sup;
                rhs.swap(i, i + 1);
                // after the swap, row i = (sub_old, diag_{i+1}, sup_{i+1}) and row i+1 = (diag_old, sup_old, 0)
                let factor = sub[i] / diag[i];
                diag[i + 1] -= factor * sup[i];
                sup[i + 1] -= factor * sup2[i];
                rhs[i + 1] -= factor * rhs[i];
            } else {
                if diag[i] == 0.0 {
                    diag[i] = eps;
                }
                let factor = sub[i] / diag[i];
                diag[i + 1] -= factor * sup[i];
                rhs[i + 1] -= factor * rhs[i];
            }
        }
        if diag[n - 1] == 0.0 {
            diag[n - 1] = eps;
        }
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let mut v = rhs[i];
            if i + 1 < n {
                v -= sup[i] * y[i + 1];
            }
            if i + 2 < n {
                v -= sup2[i] * y[i + 2];
            }
            let d = if diag[i] == 0.0 { eps } else { diag[i] };
            y[i] = v / d;
        }
        y
    }

    /// Lowest `count` eigenpairs with unit-norm, mutually orthogonal vectors.
    pub fn lowest_eigenpairs(&self, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.d.len();
        if count > n {
            return Err(Error::InvalidArgument(format!(
                "requested {count} eigenpairs of a {n}x{n} matrix"
            )));
        }
        let norm = self.norm_estimate();
        let mut values = Vec::with_capacity(count);
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
        for k in 0..count {
            let lambda = self.eigenvalue(k);
            // deterministic, non-degenerate start vector
            let mut x: Vec<f64> = (0..n)
                .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_75 * (k as f64 + 1.0)).sin())
                .collect();
            normalize(&mut x);
            let mut converged = false;
            // extra sweeps after the residual test passes drive the vector
            // error down to roundoff
            let mut sweeps_after = 0;
            for _ in 0..10 {
                let mut y = self.shifted_solve(lambda, &x);
                for prev in &vectors {
                    let dot = dot(prev, &y);
                    axpy(-dot, prev, &mut y);
                }
                normalize(&mut y);
                x = y;
                if converged || self.residual(lambda, &x) <= 1e-10 * norm {
                    converged = true;
                    sweeps_after += 1;
                    if sweeps_after > 2 {
                        break;
                    }
                }
            }
            if !converged {
                return Err(Error::EigenSolver {
                    mode: k,
                    reason: format!("inverse iteration residual {:e}", self.residual(lambda, &x)),
                });
            }
            values.push(lambda);
            vectors.push(x);
        }
        Ok((values, vectors))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(x: &mut [f64]) {
    let n = dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}
