//! Numerical integration: fixed and adaptive Gauss–Legendre rules, plus
//! weights for samples on uniform grids.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are found by Newton iteration on the Legendre polynomial,
    /// starting from the Tricomi approximation.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let d = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Globally adaptive bisection on top of a fixed Gauss–Legendre rule.
///
/// A panel is accepted when the rule on the whole panel and the sum over its
/// two halves agree to within the panel's share of the absolute tolerance.
#[derive(Debug, Clone)]
pub struct AdaptiveQuadrature {
    rule: GaussLegendre,
    abs_tol: f64,
    max_depth: usize,
}

impl AdaptiveQuadrature {
    pub fn new(order: usize, abs_tol: f64) -> Self {
        Self {
            rule: GaussLegendre::new(order),
            abs_tol,
            max_depth: 40,
        }
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    pub fn abs_tol(&self) -> f64 {
        self.abs_tol
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let whole = self.rule.integrate(a, b, &f);
        self.refine(&f, a, b, whole, self.abs_tol, 0)
    }

    fn refine<F: Fn(f64) -> f64>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let mid = 0.5 * (a + b);
        let left = self.rule.integrate(a, mid, f);
        let right = self.rule.integrate(mid, b, f);
        let split = left + right;
        let estimate = (split - whole).abs();
        if estimate <= tol || estimate <= 4.0 * f64::EPSILON * split.abs() {
            return Ok(split);
        }
        if depth >= self.max_depth || mid <= a || mid >= b {
            return Err(Error::Quadrature { a, b, estimate });
        }
        let l = self.refine(f, a, mid, left, 0.5 * tol, depth + 1)?;
        let r = self.refine(f, mid, b, right, 0.5 * tol, depth + 1)?;
        Ok(l + r)
    }
}

impl Default for AdaptiveQuadrature {
    fn default() -> Self {
        Self::new(10, 1e-12)
    }
}

/// Weights of the fourth-order Gregory rule (trapezoid with end corrections)
/// for `len` samples at spacing `h`, endpoints included.
///
/// Falls back to the plain trapezoid rule for fewer than six samples.
pub fn gregory_weights(len: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; len];
    if len < 6 {
        return trapezoid_weights(len, h);
    }
    let ends = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
    for (k, &c) in ends.iter().enumerate() {
        w[k] = c * h;
        w[len - 1 - k] = c * h;
    }
    w
}

pub fn trapezoid_weights(len: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; len];
    if let Some(first) = w.first_mut() {
        *first = 0.5 * h;
    }
    if let Some(last) = w.last_mut() {
        *last = 0.5 * h;
    }
    if len == 1 {
        w[0] = 0.0;
    }
    w
}

/// `Σ w_i f_i`.
pub fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    debug_assert_eq!(weights.len(), values.len());
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(5);
        for k in 0..10 {
            let exact = 1.0 / (k as f64 + 1.0);
            assert_abs_diff_eq!(rule.integrate(0.0, 1.0, |x| x.powi(k)), exact, epsilon = 1e-14);
        }
        let w: f64 = rule.weights().iter().sum();
        assert_abs_diff_eq!(w, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn high_order_rule_nodes_are_symmetric() {
        let rule = GaussLegendre::new(40);
        for (a, b) in rule.nodes().iter().zip(rule.nodes().iter().rev()) {
            assert_abs_diff_eq!(*a, -*b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(rule.integrate(0.0, PI, f64::sin), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let q = AdaptiveQuadrature::new(10, 1e-10);
        let v = q.integrate(0.0, 1.0, |x| x.sqrt()).unwrap();
        assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn adaptive_reports_failure_interval() {
        let q = AdaptiveQuadrature::new(4, 1e-14).with_max_depth(3);
        let err = q.integrate(0.0, 1.0, |x| 1.0 / (x + 1e-9)).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn gregory_rule_is_exact_for_cubics() {
        let n = 33;
        let h = 1.0 / (n - 1) as f64;
        let w = gregory_weights(n, h);
        let f: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 * h;
                1.0 - 2.0 * x + 3.0 * x * x - 4.0 * x * x * x
            })
            .collect();
        assert_abs_diff_eq!(weighted_sum(&w, &f), 1.0 - 1.0 + 1.0 - 1.0, epsilon = 1e-13);
    }
}
