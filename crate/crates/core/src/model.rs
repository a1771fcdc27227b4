//! Equation coefficients in factored form.
//!
//! The forward equation `∂ₜp = ∂ₓ²(F p) − ∂ₓ(G p)` is described through the
//! smooth factors of its coefficients, `F(x) = x(1−x)Ψ(x)` and
//! `G(x) = x(1−x)Π(x)`, with `Ψ > 0` on `[0, 1]`. Everything else the solvers
//! need is derived from `Ψ` and `Π`:
//!
//! * `Ξ = Π/Ψ`, the drift-to-diffusion ratio,
//! * `θ = 1/(Ψ x(1−x))`, the weight of the associated Sturm–Liouville problem,
//! * `V = ¼(2Ξ′ + Ξ²)`, its potential.

use crate::error::{Error, Result};
use crate::quadrature::AdaptiveQuadrature;
use std::sync::OnceLock;

/// Number of uniform samples used to check positivity of `Ψ`.
pub const POSITIVITY_SAMPLES: usize = 10_000;

/// Absolute tolerance of `∫₀ˣ Ξ`.
pub const XI_INTEGRAL_TOL: f64 = 1e-12;

fn xi_quadrature() -> &'static AdaptiveQuadrature {
    static RULE: OnceLock<AdaptiveQuadrature> = OnceLock::new();
    RULE.get_or_init(|| AdaptiveQuadrature::new(10, XI_INTEGRAL_TOL))
}

/// Polynomial with coefficients in ascending-degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative, by Horner's scheme.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }
}

/// The factored coefficients `Ψ`, `Π` of the forward equation.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientModel {
    psi: Polynomial,
    pi: Polynomial,
}

/// Pointwise values of the derived coefficient fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fields {
    pub f: f64,
    pub g: f64,
    pub xi: f64,
    pub theta: f64,
    pub v: f64,
}

impl CoefficientModel {
    /// Builds a model from ascending coefficient lists, rejecting any `Ψ`
    /// that is not positive on `[0, 1]`.
    pub fn new(psi_coeffs: Vec<f64>, pi_coeffs: Vec<f64>) -> Result<Self> {
        if psi_coeffs.is_empty() {
            return Err(Error::InvalidModel("psi must have at least one coefficient".into()));
        }
        if psi_coeffs.iter().chain(&pi_coeffs).any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("coefficients must be finite".into()));
        }
        let model = Self {
            psi: Polynomial::new(psi_coeffs),
            pi: Polynomial::new(pi_coeffs),
        };
        model.check_psi_positive()?;
        Ok(model)
    }

    /// Kimura model with frequency-dependent selection: `Ψ ≡ 1`, `Π(x) = ηx + β`.
    pub fn kimura(eta: f64, beta: f64) -> Self {
        Self {
            psi: Polynomial::constant(1.0),
            pi: if eta == 0.0 {
                Polynomial::constant(beta)
            } else {
                Polynomial::new(vec![beta, eta])
            },
        }
    }

    /// The neutral model `F(x) = x(1−x)`, `G ≡ 0`.
    pub fn neutral() -> Self {
        Self::kimura(0.0, 0.0)
    }

    fn check_psi_positive(&self) -> Result<()> {
        let n = POSITIVITY_SAMPLES;
        let (mut min, mut arg) = (f64::INFINITY, 0.0);
        for i in 0..=n {
            let x = i as f64 / n as f64;
            let v = self.psi.eval(x);
            if v < min {
                min = v;
                arg = x;
            }
        }
        if min > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidModel(format!(
                "psi must be positive on [0,1]; found psi({arg}) = {min}"
            )))
        }
    }

    pub fn psi(&self) -> &Polynomial {
        &self.psi
    }

    pub fn pi(&self) -> &Polynomial {
        &self.pi
    }

    pub fn psi_at(&self, x: f64) -> f64 {
        self.psi.eval(x)
    }

    /// `Ξ(x) = Π(x)/Ψ(x)`; defined on the closed interval.
    pub fn xi(&self, x: f64) -> f64 {
        self.pi.eval(x) / self.psi.eval(x)
    }

    /// `Ξ′(x)` by the quotient rule.
    pub fn xi_prime(&self, x: f64) -> f64 {
        let (p, dp) = self.pi.eval_with_derivative(x);
        let (s, ds) = self.psi.eval_with_derivative(x);
        (dp * s - p * ds) / (s * s)
    }

    /// `F(x) = x(1−x)Ψ(x)`.
    pub fn f(&self, x: f64) -> f64 {
        x * (1.0 - x) * self.psi.eval(x)
    }

    /// `G(x) = x(1−x)Π(x)`.
    pub fn g(&self, x: f64) -> f64 {
        x * (1.0 - x) * self.pi.eval(x)
    }

    /// `θ(x) = 1/(Ψ(x) x(1−x))`; only valid in the open interval.
    pub fn theta(&self, x: f64) -> f64 {
        1.0 / (self.psi.eval(x) * x * (1.0 - x))
    }

    /// `V(x) = ¼(2Ξ′(x) + Ξ(x)²)`.
    pub fn potential(&self, x: f64) -> f64 {
        let xi = self.xi(x);
        0.25 * (2.0 * self.xi_prime(x) + xi * xi)
    }

    pub fn evaluate_fields(&self, x: f64) -> Result<Fields> {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Domain { x, domain: "(0, 1)" });
        }
        Ok(Fields {
            f: self.f(x),
            g: self.g(x),
            xi: self.xi(x),
            theta: self.theta(x),
            v: self.potential(x),
        })
    }

    /// `∫₀ˣ Ξ(s) ds`.
    pub fn integral_xi(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { x, domain: "[0, 1]" });
        }
        self.integral_xi_between(0.0, x)
    }

    /// `∫ₐᵇ Ξ(s) ds` for `0 ≤ a, b ≤ 1`.
    pub fn integral_xi_between(&self, a: f64, b: f64) -> Result<f64> {
        if self.pi.coeffs().iter().all(|&c| c == 0.0) {
            return Ok(0.0);
        }
        xi_quadrature().integrate(a, b, |s| self.xi(s))
    }

    /// Cumulative `∫₀^{x_i} Ξ` on an increasing grid starting at or after 0.
    pub fn integral_xi_on_grid(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &x in grid {
            if !(0.0..=1.0).contains(&x) || x < prev {
                return Err(Error::Domain { x, domain: "increasing grid in [0, 1]" });
            }
            acc += self.integral_xi_between(prev, x)?;
            out.push(acc);
            prev = x;
        }
        Ok(out)
    }

    /// `∫₀ˣ √θ(s) ds`, the Liouville–Green phase. Evaluated after the
    /// substitution `s = sin²v`, which removes the endpoint singularities.
    pub fn sqrt_theta_integral_on_grid(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let quad = AdaptiveQuadrature::new(10, 1e-13);
        let integrand = |v: f64| {
            let s = v.sin().powi(2);
            2.0 / self.psi.eval(s).sqrt()
        };
        let mut out = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &x in grid {
            if !(0.0..=1.0).contains(&x) || x < prev {
                return Err(Error::Domain { x, domain: "increasing grid in [0, 1]" });
            }
            acc += quad.integrate(prev.sqrt().asin(), x.sqrt().asin(), integrand)?;
            out.push(acc);
            prev = x;
        }
        Ok(out)
    }
}
