//! Weak-form check against test functions `ζ(t)χ(x)`, `ζ` a smooth bump
//! compactly supported in `(t₀, t₁) ⊂ (0, ∞)`:
//!
//! ```text
//! −∫ ζ′(t) [∫q χ + a χ(0) + b χ(1)] dt = ∫ ζ(t) ∫ q (Fχ″ + Gχ′) dx dt.
//! ```
//!
//! The atoms do not enter the right-hand side because `F` and `G` vanish at
//! the endpoints.

use super::initial::closed_integral;
use super::{boundary_masses, Evolution};
use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

const TIME_PANELS: usize = 32;
const TIME_ORDER: usize = 10;

/// Spatial factor of a test function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chi {
    One,
    /// The fixation probability `ψ`, for which `Fψ″ + Gψ′ ≡ 0`.
    Fixation,
    /// `x(1−x)`.
    Bubble,
    /// `x²(1−x)`.
    SkewBubble,
}

impl Chi {
    pub fn name(&self) -> &'static str {
        match self {
            Chi::One => "1",
            Chi::Fixation => "psi",
            Chi::Bubble => "x(1-x)",
            Chi::SkewBubble => "x^2(1-x)",
        }
    }

    // (χ, χ′, χ″) for the polynomial cases
    fn jet(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Chi::One | Chi::Fixation => (1.0, 0.0, 0.0),
            Chi::Bubble => (x * (1.0 - x), 1.0 - 2.0 * x, -2.0),
            Chi::SkewBubble => (x * x * (1.0 - x), 2.0 * x - 3.0 * x * x, 2.0 - 6.0 * x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub t0: f64,
    pub t1: f64,
    pub chi: Chi,
}

impl TestFunction {
    // (ζ, ζ′) for ζ(t) = exp(−1/(1−s²)), s mapping (t₀, t₁) onto (−1, 1)
    fn zeta(&self, t: f64) -> (f64, f64) {
        let half = 0.5 * (self.t1 - self.t0);
        let s = (t - 0.5 * (self.t0 + self.t1)) / half;
        if s.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let r = 1.0 - s * s;
        let z = (-1.0 / r).exp();
        (z, z * (-2.0 * s / (r * r)) / half)
    }
}

/// Tensor products of two time windows with every [`Chi`].
pub fn weak_form_library() -> Vec<TestFunction> {
    let windows = [(0.05, 1.0), (0.5, 2.5)];
    let chis = [Chi::One, Chi::Fixation, Chi::Bubble, Chi::SkewBubble];
    windows
        .iter()
        .flat_map(|&(t0, t1)| chis.iter().map(move |&chi| TestFunction { t0, t1, chi }))
        .collect()
}

/// Absolute residual of the weak formulation for one test function.
pub fn verify_weak_form(ev: &Evolution, test: &TestFunction) -> Result<f64> {
    if !(test.t0 > 0.0 && test.t1 > test.t0) {
        return Err(Error::InvalidArgument(format!(
            "test window ({}, {}) must lie in (0, ∞)",
            test.t0, test.t1
        )));
    }
    let basis = &ev.basis;
    let tr = basis.transforms()?;
    let grid = basis.closed_grid();
    let psi = ev.psi();
    let m = ev.coeffs.modes_used;

    let (chi_values, generator): (Vec<f64>, Vec<f64>) = match test.chi {
        Chi::Fixation => (psi.to_vec(), vec![0.0; grid.len()]),
        chi => grid
            .iter()
            .map(|&x| {
                let (c, d1, d2) = chi.jet(x);
                (c, ev.model.f(x) * d2 + ev.model.g(x) * d1)
            })
            .unzip(),
    };
    let (chi0, chi1) = (chi_values[0], chi_values[grid.len() - 1]);

    // per-mode spatial integrals ∫q_jχ and ∫q_j(Fχ″ + Gχ′)
    let mut pairing = Vec::with_capacity(m);
    let mut action = Vec::with_capacity(m);
    for q in &tr.q[..m] {
        let a: Vec<f64> = q.iter().zip(&chi_values).map(|(q, c)| q * c).collect();
        let b: Vec<f64> = q.iter().zip(&generator).map(|(q, g)| q * g).collect();
        pairing.push(closed_integral(basis, &a));
        action.push(closed_integral(basis, &b));
    }

    let lam = basis.eigenvalues();
    let w = &ev.coeffs.what_hat;
    let rule = GaussLegendre::new(TIME_ORDER);
    let panel = (test.t1 - test.t0) / TIME_PANELS as f64;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for p in 0..TIME_PANELS {
        let start = test.t0 + p as f64 * panel;
        for (node, weight) in rule.nodes().iter().zip(rule.weights()) {
            let t = start + 0.5 * panel * (node + 1.0);
            let wt = 0.5 * panel * weight;
            let (z, dz) = test.zeta(t);
            let mut interior = 0.0;
            let mut generated = 0.0;
            for j in 0..m {
                let e = w[j] * (-lam[j] * t).exp();
                interior += e * pairing[j];
                generated += e * action[j];
            }
            let (a, b) = boundary_masses(basis, &ev.coeffs, &ev.init, &ev.limits, t)?;
            lhs -= wt * dz * (interior + a * chi0 + b * chi1);
            rhs += wt * z * generated;
        }
    }
    Ok((lhs - rhs).abs())
}
