//! Fixation probability: the non-constant stationary solution of the backward
//! equation `Fψ″ + Gψ′ = 0` with `ψ(0) = 0`, `ψ(1) = 1`.
//!
//! In factored form `ψ(x) = c⁻¹∫₀ˣ exp(−∫₀ˢΞ) ds` with `c = ∫₀¹ exp(−∫₀ˢΞ) ds`.

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::model::CoefficientModel;
use crate::quadrature::AdaptiveQuadrature;

/// Per-panel tolerance of the outer integral.
const PANEL_TOL: f64 = 1e-14;

/// `ψ` sampled on a uniform grid of `[0, 1]`, together with `c`.
#[derive(Debug, Clone)]
pub struct FixationProfile {
    grid: Vec<f64>,
    psi_values: Vec<f64>,
    c: f64,
    interpolant: MonotoneCubic,
}

impl FixationProfile {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.psi_values
    }

    /// Normalization constant `c = ∫₀¹ exp(−∫₀ˢΞ) ds`.
    pub fn normalization(&self) -> f64 {
        self.c
    }

    /// `ψ(x)` off the grid, by monotone cubic interpolation.
    pub fn value_at(&self, x: f64) -> f64 {
        self.interpolant.eval(x)
    }
}

/// Computes `ψ` on `n_points` uniform points by nested adaptive quadrature.
pub fn fixation_profile(model: &CoefficientModel, n_points: usize) -> Result<FixationProfile> {
    if n_points < 3 {
        return Err(Error::InvalidArgument(format!(
            "fixation profile needs at least 3 points, got {n_points}"
        )));
    }
    let h = 1.0 / (n_points - 1) as f64;
    let grid: Vec<f64> = (0..n_points)
        .map(|i| if i == n_points - 1 { 1.0 } else { i as f64 * h })
        .collect();
    let outer = AdaptiveQuadrature::new(10, PANEL_TOL);

    let mut cumulative = Vec::with_capacity(n_points);
    cumulative.push(0.0);
    let mut exponent_left = 0.0;
    let mut acc = 0.0;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        // inner integral measured from the panel's left end
        let panel = outer.integrate(a, b, |s| {
            let inner = model.integral_xi_between(a, s).unwrap_or(f64::NAN);
            (-(exponent_left + inner)).exp()
        })?;
        if !panel.is_finite() {
            return Err(Error::Quadrature { a, b, estimate: f64::NAN });
        }
        acc += panel;
        cumulative.push(acc);
        exponent_left += model.integral_xi_between(a, b)?;
    }

    let c = acc;
    let mut psi_values: Vec<f64> = cumulative.iter().map(|v| v / c).collect();
    psi_values[0] = 0.0;
    psi_values[n_points - 1] = 1.0;
    let interpolant = MonotoneCubic::new(grid.clone(), psi_values.clone());
    Ok(FixationProfile {
        grid,
        psi_values,
        c,
        interpolant,
    })
}

/// `∫₀¹ exp(−∫₀ˢΞ) ds` by a single adaptive quadrature, evaluating the inner
/// integral from zero at every node. Independent of [`fixation_profile`].
pub fn normalization_direct(model: &CoefficientModel) -> Result<f64> {
    AdaptiveQuadrature::new(15, 1e-13).integrate(0.0, 1.0, |s| {
        (-model.integral_xi(s).unwrap_or(f64::NAN)).exp()
    })
}

/// Self-test: `max |Fψ″ + Gψ′|` over interior grid points, with centered
/// differences on the profile's grid.
pub fn backward_residual(model: &CoefficientModel, profile: &FixationProfile) -> f64 {
    sampled_backward_residual(model, profile.grid(), profile.values())
}

/// Same as [`backward_residual`] for arbitrary samples on a uniform grid.
pub fn sampled_backward_residual(model: &CoefficientModel, grid: &[f64], values: &[f64]) -> f64 {
    let n = grid.len();
    let mut worst = 0.0f64;
    for i in 1..n.saturating_sub(1) {
        let h = 0.5 * (grid[i + 1] - grid[i - 1]);
        let x = grid[i];
        let d2 = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
        let d1 = (values[i + 1] - values[i - 1]) / (2.0 * h);
        worst = worst.max((model.f(x) * d2 + model.g(x) * d1).abs());
    }
    worst
}
