//! Interpolation of sampled functions.

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `x` must be strictly increasing and of the same length as `y` (≥ 2).
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        assert!(x.len() >= 2 && x.len() == y.len());
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut slopes = vec![0.0; n];
        if n == 2 {
            slopes = vec![delta[0]; 2];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    slopes[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            slopes[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            slopes[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Self { x, y, slopes }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    /// Evaluates the interpolant; clamps to the end values outside the knots.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i] + h10 * h * self.slopes[i] + h01 * self.y[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

// Three-point one-sided slope, limited to preserve monotonicity.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Four-point Lagrange interpolation of samples `values[i]` at `x = origin + i·h`.
/// Near the ends the stencil is shifted inward.
pub fn lagrange_uniform(values: &[f64], origin: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    if n < 4 {
        let i = (((x - origin) / h).floor() as isize).clamp(0, n as isize - 2) as usize;
        let s = (x - origin) / h - i as f64;
        return values[i] * (1.0 - s) + values[i + 1] * s;
    }
    let pos = (x - origin) / h;
    let start = ((pos.floor() as isize) - 1).clamp(0, n as isize - 4) as usize;
    let mut acc = 0.0;
    for k in 0..4 {
        let xk = (start + k) as f64;
        let mut l = 1.0;
        for m in 0..4 {
            if m != k {
                let xm = (start + m) as f64;
                l *= (pos - xm) / (xk - xm);
            }
        }
        acc += l * values[start + k];
    }
    acc
}

/// Value at the grid origin of the degree-`p−1` polynomial through
/// `samples[k]` at offsets `(k+1)·h`, `k = 0..p`.
///
/// The weights are `(−1)^{k} C(p, k+1)`, independent of `h`.
pub fn extrapolate_to_origin(samples: &[f64], points: usize) -> f64 {
    assert!(points >= 1 && samples.len() >= points);
    let mut binom = 1.0f64;
    let mut acc = 0.0;
    for (k, &s) in samples.iter().take(points).enumerate() {
        binom = binom * (points - k) as f64 / (k + 1) as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * s;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn monotone_cubic_reproduces_knots_and_lines() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let p = MonotoneCubic::new(x.clone(), y);
        for t in [0.0, 0.05, 0.33, 0.999, 1.0] {
            assert_abs_diff_eq!(p.eval(t), 2.0 * t + 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn extrapolation_weights() {
        // 3 points: 3, -3, 1
        assert_abs_diff_eq!(extrapolate_to_origin(&[1.0, 0.0, 0.0], 3), 3.0);
        assert_abs_diff_eq!(extrapolate_to_origin(&[0.0, 1.0, 0.0], 3), -3.0);
        assert_abs_diff_eq!(extrapolate_to_origin(&[0.0, 0.0, 1.0], 3), 1.0);
        // exact for quartics with five points
        let f = |x: f64| 2.0 - x + 3.0 * x * x - x.powi(4);
        let h = 0.1;
        let s: Vec<f64> = (1..=5).map(|k| f(k as f64 * h)).collect();
        assert_abs_diff_eq!(extrapolate_to_origin(&s, 5), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn lagrange_is_exact_for_cubics() {
        let f = |x: f64| 1.0 + x - 2.0 * x * x + 0.5 * x * x * x;
        let h = 0.05;
        let v: Vec<f64> = (0..21).map(|i| f(0.1 + i as f64 * h)).collect();
        for x in [0.1, 0.123, 0.5, 1.09] {
            assert_abs_diff_eq!(lagrange_uniform(&v, 0.1, h, x), f(x), epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn monotone_data_gives_monotone_interpolant(steps in prop::collection::vec(0.0f64..1.0, 3..30), t in 0.0f64..1.0, dt in 0.0f64..0.2) {
            let n = steps.len();
            let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
            let mut y = Vec::with_capacity(n);
            let mut acc = 0.0;
            for s in &steps { acc += s; y.push(acc); }
            let p = MonotoneCubic::new(x, y);
            let u = (t + dt).min(1.0);
            prop_assert!(p.eval(u) >= p.eval(t) - 1e-12);
        }
    }
}
