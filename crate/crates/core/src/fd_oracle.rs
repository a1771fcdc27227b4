//! Finite-volume reference solver for `∂ₜq = ∂ₓJ`, `J = ∂ₓ(Fq) − Gq`, with
//! the outflow through each end accumulated into the boundary atoms.
//!
//! Cells are `[ih, (i+1)h]` with averages `q_i`. At an interior face
//! `J ≈ (F_{i+1}q_{i+1} − F_iq_i)/h − G·(q_i + q_{i+1})/2`. At `x = 0` the
//! flux reduces to `F′(0)q(0) = Ψ(0)q(0)`, with `q(0)` extrapolated from the
//! first three cells; `a′ = J(0)` and `b′ = −J(1)`.
//!
//! Time stepping is Crank–Nicolson. The first two steps are each replaced by
//! two implicit Euler half steps to damp the non-smooth start produced by
//! point masses.

use crate::error::{Error, Result};
use crate::evolution::{InitialMeasure, SolutionMeasure};
use crate::interp::lagrange_uniform;
use crate::model::CoefficientModel;

pub const MIN_CELLS: usize = 128;

/// Number of leading Crank–Nicolson steps replaced by implicit Euler pairs.
const DAMPING_STEPS: usize = 2;

// one-sided extrapolation of cell averages to the face: (15, −10, 3)/8
const EXTRAP: [f64; 3] = [15.0 / 8.0, -10.0 / 8.0, 3.0 / 8.0];

#[derive(Debug, Clone)]
pub struct FdState {
    pub t: f64,
    pub h: f64,
    /// Cell averages on `[ih, (i+1)h]`.
    pub q: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl FdState {
    pub fn interior_mass(&self) -> f64 {
        self.q.iter().sum::<f64>() * self.h
    }

    pub fn total_mass(&self) -> f64 {
        self.a + self.b + self.interior_mass()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.q.len()).map(|i| (i as f64 + 0.5) * self.h).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FdRun {
    pub states: Vec<FdState>,
    /// Largest change of `a + b + hΣq` over a single step.
    pub max_step_drift: f64,
    /// Smallest cell average seen after any step.
    pub min_density: f64,
    pub steps: usize,
}

// L q = (J_{i+1} − J_i)/h written as a tridiagonal matrix plus one extra
// entry in the first and last rows
struct Operator {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    first_extra: f64,
    last_extra: f64,
    left: [f64; 3],
    right: [f64; 3],
}

impl Operator {
    fn new(model: &CoefficientModel, n: usize) -> Self {
        let h = 1.0 / n as f64;
        let f: Vec<f64> = (0..n).map(|i| model.f((i as f64 + 0.5) * h)).collect();
        // interior face k sits at x = kh, k = 1..n−1: J_k = α_k q_{k−1} + β_k q_k
        let mut alpha = vec![0.0; n + 1];
        let mut beta = vec![0.0; n + 1];
        for k in 1..n {
            let g = model.g(k as f64 * h);
            alpha[k] = -f[k - 1] / h - 0.5 * g;
            beta[k] = f[k] / h - 0.5 * g;
        }
        let psi0 = model.psi_at(0.0);
        let psi1 = model.psi_at(1.0);
        let left = EXTRAP.map(|c| psi0 * c);
        // J_n = −Ψ(1)(15q_{n−1} − 10q_{n−2} + 3q_{n−3})/8
        let right = EXTRAP.map(|c| -psi1 * c);

        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for i in 0..n {
            // + J_{i+1}
            if i + 1 < n {
                diag[i] += alpha[i + 1] / h;
                sup[i] += beta[i + 1] / h;
            }
            // − J_i
            if i > 0 {
                sub[i] -= alpha[i] / h;
                diag[i] -= beta[i] / h;
            }
        }
        diag[0] -= left[0] / h;
        sup[0] -= left[1] / h;
        let first_extra = -left[2] / h;
        diag[n - 1] += right[0] / h;
        sub[n - 1] += right[1] / h;
        let last_extra = right[2] / h;
        Self {
            sub,
            diag,
            sup,
            first_extra,
            last_extra,
            left,
            right,
        }
    }

    fn left_flux(&self, q: &[f64]) -> f64 {
        self.left[0] * q[0] + self.left[1] * q[1] + self.left[2] * q[2]
    }

    fn right_flux(&self, q: &[f64]) -> f64 {
        let n = q.len();
        self.right[0] * q[n - 1] + self.right[1] * q[n - 2] + self.right[2] * q[n - 3]
    }

    fn apply(&self, q: &[f64]) -> Vec<f64> {
        let n = q.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * q[i];
            if i > 0 {
                v += self.sub[i] * q[i - 1];
            }
            if i + 1 < n {
                v += self.sup[i] * q[i + 1];
            }
            out[i] = v;
        }
        out[0] += self.first_extra * q[2];
        out[n - 1] += self.last_extra * q[n - 3];
        out
    }

    /// Solves `(I − cL) y = r`.
    fn solve_shifted(&self, c: f64, r: &[f64]) -> Vec<f64> {
        let n = r.len();
        let mut sub: Vec<f64> = self.sub.iter().map(|v| -c * v).collect();
        let mut diag: Vec<f64> = self.diag.iter().map(|v| 1.0 - c * v).collect();
        let mut sup: Vec<f64> = self.sup.iter().map(|v| -c * v).collect();
        let mut rhs = r.to_vec();
        // remove the (0, 2) entry with row 1 and the (n−1, n−3) entry with row n−2
        let extra = -c * self.first_extra;
        let f = extra / sup[1];
        diag[0] -= f * sub[1];
        sup[0] -= f * diag[1];
        rhs[0] -= f * rhs[1];
        let extra = -c * self.last_extra;
        let f = extra / sub[n - 2];
        diag[n - 1] -= f * sup[n - 2];
        sub[n - 1] -= f * diag[n - 2];
        rhs[n - 1] -= f * rhs[n - 2];
        // Thomas algorithm
        for i in 1..n {
            let m = sub[i] / diag[i - 1];
            diag[i] -= m * sup[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        let mut y = vec![0.0; n];
        y[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = (rhs[i] - sup[i] * y[i + 1]) / diag[i];
        }
        y
    }
}

/// Cell averages of the initial data. Point masses are split between the two
/// cells whose centres bracket them so that mass and first moment are kept.
pub fn initial_cells(init: &InitialMeasure, n_cells: usize) -> Vec<f64> {
    let h = 1.0 / n_cells as f64;
    let mut q: Vec<f64> = (0..n_cells)
        .map(|i| init.density.value_at((i as f64 + 0.5) * h))
        .collect();
    for atom in &init.atoms {
        let pos = atom.x / h - 0.5;
        if pos <= 0.0 {
            q[0] += atom.mass / h;
        } else if pos >= (n_cells - 1) as f64 {
            q[n_cells - 1] += atom.mass / h;
        } else {
            let i = pos.floor() as usize;
            let s = pos - i as f64;
            q[i] += (1.0 - s) * atom.mass / h;
            q[i + 1] += s * atom.mass / h;
        }
    }
    q
}

/// Evolves the data to each of `output_times` (nondecreasing, nonnegative).
/// `dt ≤ h` is an upper bound; each interval between outputs is split into
/// equal steps.
pub fn evolve_fd(
    model: &CoefficientModel,
    init: &InitialMeasure,
    output_times: &[f64],
    n_cells: usize,
    dt: f64,
) -> Result<FdRun> {
    if n_cells < MIN_CELLS {
        return Err(Error::Resolution(format!("n_cells = {n_cells} < {MIN_CELLS}")));
    }
    let h = 1.0 / n_cells as f64;
    if !(dt > 0.0 && dt <= h) {
        return Err(Error::StepSize { dt, h });
    }
    if output_times.iter().any(|t| !(*t >= 0.0)) || output_times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("output times must be nonnegative and nondecreasing".into()));
    }
    init.validate()?;
    let op = Operator::new(model, n_cells);
    let mut q = initial_cells(init, n_cells);
    let (mut a, mut b) = (init.a0, init.b0);
    let mass_scale = init.total_mass().abs().max(f64::MIN_POSITIVE);
    let tolerance = 1e-8 * mass_scale / h;

    let mut t = 0.0;
    let mut steps = 0usize;
    let mut max_step_drift = 0.0f64;
    let mut min_density = f64::INFINITY;
    let mut states = Vec::with_capacity(output_times.len());
    for &target in output_times {
        let span = target - t;
        let count = if span > 0.0 { (span / dt).ceil() as usize } else { 0 };
        let k = if count > 0 { span / count as f64 } else { 0.0 };
        for _ in 0..count {
            let before = a + b + h * q.iter().sum::<f64>();
            if steps < DAMPING_STEPS {
                for _ in 0..2 {
                    q = op.solve_shifted(0.5 * k, &q);
                    a += 0.5 * k * op.left_flux(&q);
                    b -= 0.5 * k * op.right_flux(&q);
                }
            } else {
                let (jl, jr) = (op.left_flux(&q), op.right_flux(&q));
                let lq = op.apply(&q);
                let rhs: Vec<f64> = q.iter().zip(&lq).map(|(v, l)| v + 0.5 * k * l).collect();
                q = op.solve_shifted(0.5 * k, &rhs);
                a += 0.5 * k * (jl + op.left_flux(&q));
                b -= 0.5 * k * (jr + op.right_flux(&q));
            }
            steps += 1;
            let after = a + b + h * q.iter().sum::<f64>();
            max_step_drift = max_step_drift.max((after - before).abs());
            let low = q.iter().copied().fold(f64::INFINITY, f64::min);
            min_density = min_density.min(low);
            if !init.is_signed() && low < -tolerance {
                return Err(Error::NegativeDensity {
                    t: t + k,
                    min: low,
                    tol: tolerance,
                });
            }
            t += k;
        }
        t = target;
        states.push(FdState {
            t,
            h,
            q: q.clone(),
            a,
            b,
        });
    }
    Ok(FdRun {
        states,
        max_step_drift,
        min_density,
        steps,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct FdComparison {
    pub t: f64,
    /// `∫|q_fd − q_spectral|` at the cell centres.
    pub q_l1_diff: f64,
    pub a_diff: f64,
    pub b_diff: f64,
}

/// Pairs states by index; the spectral density is interpolated to the cell
/// centres with four-point Lagrange interpolation.
pub fn compare_with_spectral(fd: &[FdState], spectral: &[SolutionMeasure]) -> Result<Vec<FdComparison>> {
    if fd.len() != spectral.len() {
        return Err(Error::InvalidArgument(format!(
            "{} finite-difference states vs {} spectral solutions",
            fd.len(),
            spectral.len()
        )));
    }
    fd.iter()
        .zip(spectral)
        .map(|(f, s)| {
            if (f.t - s.t).abs() > 1e-12 * f.t.abs().max(1.0) {
                return Err(Error::TimeMismatch(f.t, s.t));
            }
            let q_l1_diff = f
                .centers()
                .iter()
                .zip(&f.q)
                .map(|(&x, &v)| (v - lagrange_uniform(&s.q_samples, 0.0, s.h, x)).abs())
                .sum::<f64>()
                * f.h;
            Ok(FdComparison {
                t: f.t,
                q_l1_diff,
                a_diff: (f.a - s.a).abs(),
                b_diff: (f.b - s.b).abs(),
            })
        })
        .collect()
}
