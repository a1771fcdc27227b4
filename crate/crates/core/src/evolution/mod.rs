//! Measure-valued solutions `p(t) = q(t,·) + a(t)δ₀ + b(t)δ₁` assembled from a
//! spectral basis.
//!
//! The interior density is the series `q(t,x) = Σ ŵ⁰(j) q_j(x) e^{−λ_j t}`.
//! The boundary masses follow from integrating the flux `Ψ(0)q(t,0)` in time
//! term by term:
//!
//! ```text
//! a(t) = a⁰ + Σ_j Ψ(0) ŵ⁰(j) q_j(0) (1 − e^{−λ_j t}) / λ_j.
//! ```
//!
//! For measure data `ŵ⁰(j)` does not decay, and the truncated constant term
//! `Σ_{j<m} Ψ(0)ŵ⁰(j)q_j(0)/λ_j` converges only like `m^{−1/2}`. Its exact
//! value is `a^∞ − a⁰`, which the conservation laws give directly, so
//! [`boundary_masses`] uses `a(t) = a^∞ − Σ_{j<m} Ψ(0)ŵ⁰(j)q_j(0)e^{−λ_j t}/λ_j`.
//! The plain truncated sum is available as [`series_boundary_masses`].

mod initial;
mod weak_form;

pub use initial::{project_initial, Density, InitialMeasure, PointMass, SpectralCoefficients};
pub use weak_form::{verify_weak_form, weak_form_library, Chi, TestFunction};

use crate::error::{Error, Result};
use crate::fixation::{fixation_profile, FixationProfile};
use crate::interp::lagrange_uniform;
use crate::model::CoefficientModel;
use crate::quadrature::{gregory_weights, weighted_sum};
use crate::spectral::{linear_fit, SpectralBasis};
use initial::closed_integral;

/// Relative size of the truncation estimate above which a warning is raised.
pub const TRUNCATION_WARNING: f64 = 1e-6;

/// Interior density at one time.
#[derive(Debug, Clone)]
pub struct QEvaluation {
    pub t: f64,
    /// `q(t,·)` on the basis's closed grid.
    pub samples: Vec<f64>,
    /// `e^{−λ_m t}|ŵ⁰(m)|‖q_m‖_∞` for the first omitted mode `m`.
    pub truncation_estimate: f64,
}

/// Solution measure at one time.
#[derive(Debug, Clone)]
pub struct SolutionMeasure {
    pub t: f64,
    /// Mesh width of the closed grid carrying `q_samples`.
    pub h: f64,
    pub q_samples: Vec<f64>,
    pub a: f64,
    pub b: f64,
    pub truncation_estimate: f64,
    /// Interior atoms; nonempty only at `t = 0`.
    pub atoms: Vec<PointMass>,
}

impl SolutionMeasure {
    fn weights(&self) -> Vec<f64> {
        gregory_weights(self.q_samples.len(), self.h)
    }

    /// Interior mass `∫q + Σ m_k`.
    pub fn interior_mass(&self) -> f64 {
        weighted_sum(&self.weights(), &self.q_samples) + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    /// `‖q‖₁ + Σ m_k`, the total variation of the interior part.
    pub fn interior_l1(&self) -> f64 {
        let abs: Vec<f64> = self.q_samples.iter().map(|v| v.abs()).collect();
        weighted_sum(&self.weights(), &abs) + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    pub fn total_mass(&self) -> f64 {
        self.a + self.b + self.interior_mass()
    }

    /// `b + ∫ψ dp_interior` with `ψ` given on the same grid.
    pub fn psi_mass(&self, psi: &[f64]) -> f64 {
        let weighted: Vec<f64> = self.q_samples.iter().zip(psi).map(|(q, p)| q * p).collect();
        let atoms: f64 = self
            .atoms
            .iter()
            .map(|a| a.mass * lagrange_uniform(psi, 0.0, self.h, a.x))
            .sum();
        self.b + weighted_sum(&self.weights(), &weighted) + atoms
    }

    pub fn min_density(&self) -> f64 {
        self.q_samples.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Limits `(a^∞, b^∞)` of the boundary masses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitMasses {
    pub a_inf: f64,
    pub b_inf: f64,
}

/// `b^∞ = ∫ψ dp⁰`, `a^∞ = ∫(1−ψ) dp⁰`, by Gregory quadrature on the profile's grid.
pub fn limit_masses(fixation: &FixationProfile, init: &InitialMeasure) -> LimitMasses {
    let grid = fixation.grid();
    let h = grid[1] - grid[0];
    let w = gregory_weights(grid.len(), h);
    let q = init.density_on(grid);
    let psi = fixation.values();
    let mut a_inf = init.a0;
    let mut b_inf = init.b0;
    if q.iter().any(|v| *v != 0.0) {
        let with_psi: Vec<f64> = q.iter().zip(psi).map(|(q, p)| q * p).collect();
        let without: Vec<f64> = q.iter().zip(psi).map(|(q, p)| q * (1.0 - p)).collect();
        a_inf += weighted_sum(&w, &without);
        b_inf += weighted_sum(&w, &with_psi);
    }
    for atom in &init.atoms {
        let p = lagrange_uniform(psi, 0.0, h, atom.x);
        a_inf += atom.mass * (1.0 - p);
        b_inf += atom.mass * p;
    }
    LimitMasses { a_inf, b_inf }
}

/// Series evaluation of `q(t,·)` for `t > 0`; `t = 0` returns the stored
/// initial density.
pub fn evaluate_q(basis: &SpectralBasis, coeffs: &SpectralCoefficients, t: f64) -> Result<QEvaluation> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(QEvaluation {
            t,
            samples: coeffs.initial_samples.clone(),
            truncation_estimate: 0.0,
        });
    }
    let tr = basis.transforms()?;
    let lam = basis.eigenvalues();
    let m = coeffs.modes_used;
    let mut samples = vec![0.0; basis.closed_grid().len()];
    for j in 0..m {
        let c = coeffs.what_hat[j] * (-lam[j] * t).exp();
        if c == 0.0 {
            continue;
        }
        for (s, q) in samples.iter_mut().zip(&tr.q[j]) {
            *s += c * q;
        }
    }
    let probe = m.min(basis.n_modes() - 1);
    let q_sup = tr.q[probe].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let truncation_estimate = (-lam[probe] * t).exp() * coeffs.what_hat[probe].abs() * q_sup;
    Ok(QEvaluation {
        t,
        samples,
        truncation_estimate,
    })
}

// Ψ(0)ŵ⁰(j)q_j(0)/λ_j and Ψ(1)ŵ⁰(j)q_j(1)/λ_j
fn flux_weights(basis: &SpectralBasis, coeffs: &SpectralCoefficients) -> Result<(Vec<f64>, Vec<f64>)> {
    let tr = basis.transforms()?;
    let (psi0, psi1) = basis.psi_ends();
    let lam = basis.eigenvalues();
    let m = coeffs.modes_used;
    Ok((
        (0..m).map(|j| psi0 * coeffs.what_hat[j] * tr.left[j] / lam[j]).collect(),
        (0..m).map(|j| psi1 * coeffs.what_hat[j] * tr.right[j] / lam[j]).collect(),
    ))
}

/// Boundary masses by term-wise time integration of the boundary flux, with
/// the constant term taken from the limits.
pub fn boundary_masses(
    basis: &SpectralBasis,
    coeffs: &SpectralCoefficients,
    init: &InitialMeasure,
    limits: &LimitMasses,
    t: f64,
) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok((init.a0, init.b0));
    }
    let (ca, cb) = flux_weights(basis, coeffs)?;
    let lam = basis.eigenvalues();
    let mut a = limits.a_inf;
    let mut b = limits.b_inf;
    for j in 0..ca.len() {
        let e = (-lam[j] * t).exp();
        a -= ca[j] * e;
        b -= cb[j] * e;
    }
    Ok((a, b))
}

/// `a⁰ + Σ_{j<m} Ψ(0)ŵ⁰(j)q_j(0)(1 − e^{−λ_j t})/λ_j`, likewise for `b`.
pub fn series_boundary_masses(
    basis: &SpectralBasis,
    coeffs: &SpectralCoefficients,
    init: &InitialMeasure,
    t: f64,
) -> Result<(f64, f64)> {
    let (ca, cb) = flux_weights(basis, coeffs)?;
    let lam = basis.eigenvalues();
    let mut a = init.a0;
    let mut b = init.b0;
    for j in 0..ca.len() {
        let g = -(-lam[j] * t).exp_m1();
        a += ca[j] * g;
        b += cb[j] * g;
    }
    Ok((a, b))
}

/// Boundary masses from the conservation laws.
#[derive(Debug, Clone, Copy)]
pub struct MassCrossCheck {
    pub a_route2: f64,
    pub b_route2: f64,
    /// `max(|a − a_route2|, |b − b_route2|)` against [`boundary_masses`].
    pub discrepancy: f64,
}

/// `a = a^∞ − ∫(1−ψ)q(t)`, `b = b^∞ − ∫ψq(t)`, compared with [`boundary_masses`].
/// `psi` is `ψ` on the basis's closed grid.
pub fn mass_cross_check(
    basis: &SpectralBasis,
    coeffs: &SpectralCoefficients,
    init: &InitialMeasure,
    psi: &[f64],
    limits: &LimitMasses,
    t: f64,
) -> Result<MassCrossCheck> {
    let q = evaluate_q(basis, coeffs, t)?;
    let with: Vec<f64> = q.samples.iter().zip(psi).map(|(q, p)| q * p).collect();
    let without: Vec<f64> = q.samples.iter().zip(psi).map(|(q, p)| q * (1.0 - p)).collect();
    let mut a_route2 = limits.a_inf - closed_integral(basis, &without);
    let mut b_route2 = limits.b_inf - closed_integral(basis, &with);
    if t == 0.0 {
        for atom in &init.atoms {
            let p = lagrange_uniform(psi, 0.0, basis.h(), atom.x);
            a_route2 -= atom.mass * (1.0 - p);
            b_route2 -= atom.mass * p;
        }
    }
    let (a, b) = boundary_masses(basis, coeffs, init, limits, t)?;
    Ok(MassCrossCheck {
        a_route2,
        b_route2,
        discrepancy: (a - a_route2).abs().max((b - b_route2).abs()),
    })
}

/// `(max_t |a+b+∫q − M|, max_t |b+∫ψq − b^∞|)`.
pub fn conservation_residuals(
    psi: &[f64],
    total_mass: f64,
    limits: &LimitMasses,
    solutions: &[SolutionMeasure],
) -> Result<(f64, f64)> {
    if solutions.len() < 2 {
        return Err(Error::InvalidArgument("conservation check needs at least two times".into()));
    }
    let mut mass = 0.0f64;
    let mut psi_mass = 0.0f64;
    for s in solutions {
        mass = mass.max((s.total_mass() - total_mass).abs());
        psi_mass = psi_mass.max((s.psi_mass(psi) - limits.b_inf).abs());
    }
    Ok((mass, psi_mass))
}

/// Large-time behavior of `‖q(t,·)‖₁`.
#[derive(Debug, Clone)]
pub struct DecayDiagnostics {
    /// `C_∞ = Q₀ŵ⁰(0)`.
    pub c_inf: f64,
    /// `e^{λ₀t}‖q(t,·)‖₁` at each time.
    pub scaled_l1: Vec<f64>,
    /// Least-squares slope of `log‖q(t,·)‖₁` against `t`.
    pub slope: f64,
    /// `ŵ⁰(0) = 0`: decay is governed by a higher eigenvalue.
    pub degenerate: bool,
}

pub fn decay_diagnostics(basis: &SpectralBasis, coeffs: &SpectralCoefficients, times: &[f64]) -> Result<DecayDiagnostics> {
    if times.len() < 2 || times.iter().any(|t| *t <= 0.0) {
        return Err(Error::InvalidArgument("decay fit needs at least two positive times".into()));
    }
    let tr = basis.transforms()?;
    let lam0 = basis.eigenvalues()[0];
    let scale = coeffs.l2_norm().max(f64::MIN_POSITIVE);
    let degenerate = coeffs.what_hat[0].abs() <= 1e-12 * scale;
    let mut logs = Vec::with_capacity(times.len());
    let mut scaled_l1 = Vec::with_capacity(times.len());
    for &t in times {
        let q = evaluate_q(basis, coeffs, t)?;
        let abs: Vec<f64> = q.samples.iter().map(|v| v.abs()).collect();
        let l1 = closed_integral(basis, &abs);
        logs.push(l1.ln());
        scaled_l1.push((lam0 * t).exp() * l1);
    }
    Ok(DecayDiagnostics {
        c_inf: tr.integrals[0] * coeffs.what_hat[0],
        scaled_l1,
        slope: linear_fit(times, &logs).0,
        degenerate,
    })
}

/// `(Σ ŵ⁰(j)² λ_j^s)^{1/2}` over the modes in use.
pub fn ds_norm(coeffs: &SpectralCoefficients, basis: &SpectralBasis, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("s = {s} must be nonnegative")));
    }
    Ok(coeffs.what_hat[..coeffs.modes_used]
        .iter()
        .zip(basis.eigenvalues())
        .map(|(w, l)| w * w * l.powf(s))
        .sum::<f64>()
        .sqrt())
}

/// `C_{0,s} = (Σ_j Q_j² λ_j^{−s})^{1/2}` truncated at the resolved modes.
#[derive(Debug, Clone, Copy)]
pub struct DecayConstant {
    pub value: f64,
    /// Bound on the omitted tail `(Σ_{j≥m} Q_j²λ_j^{−s})^{1/2}` from
    /// `|Q_j| ≤ Cλ_j^{−1/4}` and `λ_j ≥ K j²`; infinite for `s = 0`.
    pub tail_bound: f64,
}

pub fn decay_constant(basis: &SpectralBasis, s: f64) -> Result<DecayConstant> {
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("s = {s} must be nonnegative")));
    }
    let tr = basis.transforms()?;
    let lam = basis.eigenvalues();
    let m = basis.resolved_modes();
    let value = (0..m)
        .map(|j| tr.integrals[j].powi(2) * lam[j].powf(-s))
        .sum::<f64>()
        .sqrt();
    let tail_bound = if s == 0.0 {
        f64::INFINITY
    } else {
        let c = (0..m)
            .map(|j| tr.integrals[j].abs() * lam[j].powf(0.25))
            .fold(0.0f64, f64::max);
        // λ_j ≥ λ_{m−1}(j/(m−1))² for j ≥ m, and Σ_{j≥m} j^{−1−2s} ≤ (m−1)^{−2s}/(2s)
        let k = lam[m - 1] / ((m - 1).max(1) as f64).powi(2);
        let tail = c * c * k.powf(-0.5 - s) * ((m - 1).max(1) as f64).powf(-2.0 * s) / (2.0 * s);
        tail.sqrt()
    };
    Ok(DecayConstant { value, tail_bound })
}

/// `(a^∞−a) + (b^∞−b) + ‖q‖₁`, the total variation distance to the limit.
pub fn radon_distance_to_limit(solution: &SolutionMeasure, limits: &LimitMasses) -> Result<f64> {
    let gap_a = limits.a_inf - solution.a;
    let gap_b = limits.b_inf - solution.b;
    let tol = 1e-12 * (limits.a_inf + limits.b_inf).abs().max(1.0);
    for gap in [gap_a, gap_b] {
        if gap < -tol {
            return Err(Error::NegativeMassGap { t: solution.t, gap });
        }
    }
    Ok(gap_a.max(0.0) + gap_b.max(0.0) + solution.interior_l1())
}

/// Everything needed to evaluate one scenario at arbitrary times.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub model: CoefficientModel,
    pub basis: SpectralBasis,
    pub init: InitialMeasure,
    pub coeffs: SpectralCoefficients,
    /// `ψ` on the basis's closed grid.
    pub fixation: FixationProfile,
    pub limits: LimitMasses,
    pub total_mass: f64,
}

impl Evolution {
    pub fn new(model: &CoefficientModel, basis: SpectralBasis, init: InitialMeasure) -> Result<Self> {
        let fixation = fixation_profile(model, basis.closed_grid().len())?;
        let coeffs = project_initial(&basis, &init)?;
        let limits = limit_masses(&fixation, &init);
        let total_mass = init.total_mass();
        Ok(Self {
            model: model.clone(),
            basis,
            init,
            coeffs,
            fixation,
            limits,
            total_mass,
        })
    }

    pub fn psi(&self) -> &[f64] {
        self.fixation.values()
    }

    pub fn solution_at(&self, t: f64) -> Result<SolutionMeasure> {
        let q = evaluate_q(&self.basis, &self.coeffs, t)?;
        let (a, b) = boundary_masses(&self.basis, &self.coeffs, &self.init, &self.limits, t)?;
        Ok(SolutionMeasure {
            t,
            h: self.basis.h(),
            q_samples: q.samples,
            a,
            b,
            truncation_estimate: q.truncation_estimate,
            atoms: if t == 0.0 { self.init.atoms.clone() } else { Vec::new() },
        })
    }

    pub fn solutions(&self, times: &[f64]) -> Result<Vec<SolutionMeasure>> {
        times.iter().map(|&t| self.solution_at(t)).collect()
    }

    pub fn truncation_warning(&self, solution: &SolutionMeasure) -> bool {
        solution.truncation_estimate > TRUNCATION_WARNING * self.total_mass.abs()
    }

    pub fn cross_check(&self, t: f64) -> Result<MassCrossCheck> {
        mass_cross_check(&self.basis, &self.coeffs, &self.init, self.psi(), &self.limits, t)
    }

    pub fn conservation(&self, solutions: &[SolutionMeasure]) -> Result<(f64, f64)> {
        conservation_residuals(self.psi(), self.total_mass, &self.limits, solutions)
    }

    pub fn decay(&self, times: &[f64]) -> Result<DecayDiagnostics> {
        decay_diagnostics(&self.basis, &self.coeffs, times)
    }

    pub fn radon_distance(&self, solution: &SolutionMeasure) -> Result<f64> {
        radon_distance_to_limit(solution, &self.limits)
    }

    /// `2 C_{0,s} ‖w⁰‖_s e^{−λ₀t}`.
    pub fn radon_bound(&self, s: f64, t: f64) -> Result<f64> {
        let c = decay_constant(&self.basis, s)?;
        let norm = ds_norm(&self.coeffs, &self.basis, s)?;
        Ok(2.0 * c.value * norm * (-self.basis.eigenvalues()[0] * t).exp())
    }
}
