//! The singular Sturm–Liouville problem `−φ″ + Vφ = λθφ` on `(0, 1)` and the
//! eigenfunctions of the forward operator derived from it.
//!
//! The problem is discretized on the uniform interior grid `x_i = i·h`,
//! `h = 1/(n+1)`, with centered second differences and a diagonal mass matrix
//! `θ(x_i)`. The weight is never evaluated at the endpoints; the Dirichlet
//! conditions are implicit. The symmetric-definite pencil is reduced to a
//! symmetric tridiagonal matrix through `Θ^{−1/2}`.
//!
//! The same problem is also solved on the grid with spacing `h/2`; one
//! Richardson step combines the two for the eigenvalues and for the
//! eigenfunctions used in the forward transform
//! `q_j = exp(½∫₀ˣΞ) φ_j / (x(1−x)Ψ)`.

use crate::error::{Error, Result};
use crate::interp::extrapolate_to_origin;
use crate::model::CoefficientModel;
use crate::quadrature::{gregory_weights, weighted_sum};
use crate::tridiag::SymTridiagonal;
use std::f64::consts::PI;

pub const MIN_GRID: usize = 64;

/// Points used to extrapolate `φ_j(x)/x` to the endpoints.
pub const EXTRAPOLATION_POINTS: usize = 5;

/// Relative disagreement between the two highest extrapolation orders above
/// which a mode's endpoint values are flagged as unreliable.
pub const EXTRAPOLATION_FLAG: f64 = 1e-3;

/// Endpoint data of the forward eigenfunctions.
#[derive(Debug, Clone)]
pub struct ModeTransforms {
    /// `q_j` on the closed grid `0, x_1, …, x_n, 1`.
    pub q: Vec<Vec<f64>>,
    /// `q_j(0)`.
    pub left: Vec<f64>,
    /// `q_j(1)`.
    pub right: Vec<f64>,
    /// `Q_j = ∫₀¹ q_j`.
    pub integrals: Vec<f64>,
    /// Modes whose endpoint extrapolation was flagged.
    pub unstable: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SpectralBasis {
    h: f64,
    interior: Vec<f64>,
    closed: Vec<f64>,
    eigenvalues: Vec<f64>,
    coarse_eigenvalues: Vec<f64>,
    phi: Vec<Vec<f64>>,
    phi_refined: Vec<Vec<f64>>,
    theta: Vec<f64>,
    xi_integral: Vec<f64>,
    psi_left: f64,
    psi_right: f64,
    transforms: Option<ModeTransforms>,
}

impl SpectralBasis {
    /// Solves the eigenproblem and fills in the forward eigenfunctions.
    pub fn build(model: &CoefficientModel, n_modes: usize, n_grid: usize) -> Result<Self> {
        transform_eigenfunctions(model, solve_eigenproblem(model, n_modes, n_grid)?)
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Interior points `x_1 … x_n`.
    pub fn interior_grid(&self) -> &[f64] {
        &self.interior
    }

    /// `0, x_1, …, x_n, 1`.
    pub fn closed_grid(&self) -> &[f64] {
        &self.closed
    }

    /// Richardson-refined eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvalues of the discrete problem on the base grid alone.
    pub fn coarse_eigenvalues(&self) -> &[f64] {
        &self.coarse_eigenvalues
    }

    /// Discrete eigenvectors on the interior grid, orthonormal under
    /// `h Σ θ_i φ_i ψ_i`.
    pub fn phi(&self) -> &[Vec<f64>] {
        &self.phi
    }

    /// Richardson combination of base- and fine-grid eigenvectors.
    pub fn phi_refined(&self) -> &[Vec<f64>] {
        &self.phi_refined
    }

    /// `θ(x_i)` on the interior grid.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// `∫₀ˣΞ` on the closed grid.
    pub fn xi_integral(&self) -> &[f64] {
        &self.xi_integral
    }

    /// `(Ψ(0), Ψ(1))`.
    pub fn psi_ends(&self) -> (f64, f64) {
        (self.psi_left, self.psi_right)
    }

    pub fn transforms(&self) -> Result<&ModeTransforms> {
        self.transforms.as_ref().ok_or(Error::MissingTransform)
    }

    /// Quadrature weights on the closed grid.
    pub fn closed_weights(&self) -> Vec<f64> {
        gregory_weights(self.closed.len(), self.h)
    }

    /// Number of leading modes whose endpoint data were not flagged.
    pub fn resolved_modes(&self) -> usize {
        match &self.transforms {
            Some(t) => t.unstable.first().copied().unwrap_or(self.n_modes()),
            None => self.n_modes(),
        }
    }

    /// `max_{ij} |h Σ θ φ_i φ_j − δ_ij|`.
    pub fn gram_deviation(&self) -> f64 {
        let m = self.n_modes();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in i..m {
                let g: f64 = self.phi[i]
                    .iter()
                    .zip(&self.phi[j])
                    .zip(&self.theta)
                    .map(|((a, b), t)| a * b * t)
                    .sum::<f64>()
                    * self.h;
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

struct GridSolution {
    eigenvalues: Vec<f64>,
    phi: Vec<Vec<f64>>,
    theta: Vec<f64>,
    grid: Vec<f64>,
}

fn solve_on_grid(model: &CoefficientModel, n: usize, n_modes: usize) -> Result<GridSolution> {
    let h = 1.0 / (n + 1) as f64;
    let grid: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
    let theta: Vec<f64> = grid.iter().map(|&x| model.theta(x)).collect();
    let inv_h2 = 1.0 / (h * h);
    let d: Vec<f64> = grid
        .iter()
        .zip(&theta)
        .map(|(&x, &t)| (2.0 * inv_h2 + model.potential(x)) / t)
        .collect();
    let e: Vec<f64> = theta.windows(2).map(|w| -inv_h2 / (w[0] * w[1]).sqrt()).collect();
    let matrix = SymTridiagonal::new(d, e);
    let (eigenvalues, vectors) = matrix.lowest_eigenpairs(n_modes)?;
    let scale: Vec<f64> = theta.iter().map(|t| 1.0 / (t * h).sqrt()).collect();
    let phi = vectors
        .into_iter()
        .map(|y| {
            let mut v: Vec<f64> = y.iter().zip(&scale).map(|(a, s)| a * s).collect();
            // φ_j′(0) > 0
            if v[0] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    Ok(GridSolution {
        eigenvalues,
        phi,
        theta,
        grid,
    })
}

/// Lowest `n_modes` eigenpairs on `n_grid` interior points, with one
/// grid-doubling Richardson step.
pub fn solve_eigenproblem(model: &CoefficientModel, n_modes: usize, n_grid: usize) -> Result<SpectralBasis> {
    if n_grid < MIN_GRID {
        return Err(Error::Resolution(format!("n_grid = {n_grid} < {MIN_GRID}")));
    }
    if n_modes == 0 || n_modes > n_grid / 8 {
        return Err(Error::Resolution(format!(
            "n_modes = {n_modes} must lie in 1..={}",
            n_grid / 8
        )));
    }
    let coarse = solve_on_grid(model, n_grid, n_modes)?;
    let fine = solve_on_grid(model, 2 * n_grid + 1, n_modes)?;

    let eigenvalues: Vec<f64> = coarse
        .eigenvalues
        .iter()
        .zip(&fine.eigenvalues)
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    if eigenvalues[0] <= 0.0 {
        return Err(Error::NonPositiveEigenvalue(eigenvalues[0]));
    }
    let phi_refined = coarse
        .phi
        .iter()
        .zip(&fine.phi)
        .map(|(c, f)| {
            c.iter()
                .enumerate()
                .map(|(i, v)| (4.0 * f[2 * i + 1] - v) / 3.0)
                .collect()
        })
        .collect();

    let h = 1.0 / (n_grid + 1) as f64;
    let mut closed = Vec::with_capacity(n_grid + 2);
    closed.push(0.0);
    closed.extend_from_slice(&coarse.grid);
    closed.push(1.0);
    let xi_integral = model.integral_xi_on_grid(&closed)?;

    Ok(SpectralBasis {
        h,
        interior: coarse.grid,
        closed,
        eigenvalues,
        coarse_eigenvalues: coarse.eigenvalues,
        phi: coarse.phi,
        phi_refined,
        theta: coarse.theta,
        xi_integral,
        psi_left: model.psi_at(0.0),
        psi_right: model.psi_at(1.0),
        transforms: None,
    })
}

/// Fills `q_j`, `q_j(0)`, `q_j(1)` and `Q_j` from the refined eigenvectors.
pub fn transform_eigenfunctions(model: &CoefficientModel, mut basis: SpectralBasis) -> Result<SpectralBasis> {
    let n = basis.interior.len();
    let p = EXTRAPOLATION_POINTS;
    if n < p {
        return Err(Error::Resolution(format!("grid too small for {p}-point extrapolation")));
    }
    let weights = basis.closed_weights();
    let half_total = 0.5 * basis.xi_integral[n + 1];
    let (psi0, psi1) = (basis.psi_left, basis.psi_right);

    let mut transforms = ModeTransforms {
        q: Vec::with_capacity(basis.n_modes()),
        left: Vec::new(),
        right: Vec::new(),
        integrals: Vec::new(),
        unstable: Vec::new(),
    };
    for (j, phi) in basis.phi_refined.iter().enumerate() {
        let lhs: Vec<f64> = (0..p).map(|k| phi[k] / basis.interior[k]).collect();
        let rhs: Vec<f64> = (0..p)
            .map(|k| phi[n - 1 - k] / (1.0 - basis.interior[n - 1 - k]))
            .collect();
        let (g0, g0_low) = (extrapolate_to_origin(&lhs, p), extrapolate_to_origin(&lhs, p - 1));
        let (g1, g1_low) = (extrapolate_to_origin(&rhs, p), extrapolate_to_origin(&rhs, p - 1));
        let scale = g0.abs().max(g1.abs()).max(f64::MIN_POSITIVE);
        if (g0 - g0_low).abs() > EXTRAPOLATION_FLAG * scale || (g1 - g1_low).abs() > EXTRAPOLATION_FLAG * scale {
            transforms.unstable.push(j);
        }
        let left = g0 / psi0;
        let right = half_total.exp() * g1 / psi1;

        let mut q = Vec::with_capacity(n + 2);
        q.push(left);
        for (i, (&x, &v)) in basis.interior.iter().zip(phi).enumerate() {
            let e = (0.5 * basis.xi_integral[i + 1]).exp();
            q.push(e * v / (x * (1.0 - x) * model.psi_at(x)));
        }
        q.push(right);
        transforms.integrals.push(weighted_sum(&weights, &q));
        transforms.left.push(left);
        transforms.right.push(right);
        transforms.q.push(q);
    }
    basis.transforms = Some(transforms);
    Ok(basis)
}

/// Relative residual of `Q_j λ_j = Ψ(0)q_j(0) + Ψ(1)q_j(1)` for every mode,
/// measured against `|Ψ(0)q_j(0)| + |Ψ(1)q_j(1)|`.
pub fn identity_residuals(basis: &SpectralBasis) -> Result<Vec<f64>> {
    let t = basis.transforms()?;
    let (psi0, psi1) = basis.psi_ends();
    Ok((0..basis.n_modes())
        .map(|j| {
            let flux = psi0 * t.left[j] + psi1 * t.right[j];
            let scale = (psi0 * t.left[j]).abs() + (psi1 * t.right[j]).abs();
            (t.integrals[j] * basis.eigenvalues[j] - flux).abs() / scale.max(f64::MIN_POSITIVE)
        })
        .collect())
}

/// Least-squares fit `λ_j ≈ K j² + c` over the upper half of resolved modes.
#[derive(Debug, Clone)]
pub struct GrowthFit {
    pub k_estimate: f64,
    pub intercept: f64,
    /// `(j, λ_j/j² − K)` for `j = 1 … resolved−1`.
    pub residuals: Vec<(usize, f64)>,
}

pub fn eigenvalue_growth(basis: &SpectralBasis) -> Result<GrowthFit> {
    if basis.n_modes() < 16 {
        return Err(Error::InvalidArgument(format!(
            "growth fit needs at least 16 modes, basis has {}",
            basis.n_modes()
        )));
    }
    let resolved = basis.resolved_modes().max(2);
    let lam = basis.eigenvalues();
    let range: Vec<usize> = (resolved / 2..resolved).filter(|&j| j >= 1).collect();
    let xs: Vec<f64> = range.iter().map(|&j| (j * j) as f64).collect();
    let ys: Vec<f64> = range.iter().map(|&j| lam[j]).collect();
    let (k, c) = linear_fit(&xs, &ys);
    let residuals = (1..resolved)
        .map(|j| (j, lam[j] / (j * j) as f64 - k))
        .collect();
    Ok(GrowthFit {
        k_estimate: k,
        intercept: c,
        residuals,
    })
}

/// Weyl-law prediction `K = π² / (∫₀¹ √θ)²`.
pub fn weyl_constant(model: &CoefficientModel) -> Result<f64> {
    let u = model.sqrt_theta_integral_on_grid(&[1.0])?[0];
    Ok(PI * PI / (u * u))
}

/// Slope and intercept of the least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Liouville–Green comparison near the left endpoint.
#[derive(Debug, Clone, Copy)]
pub struct BesselComparison {
    pub mode: usize,
    /// `sup_{x ∈ (0, 1/2]} |φ_j − φ̂_j|`.
    pub sup_error: f64,
    /// Normalization amplitude `A_{0,j}` of the comparison function.
    pub amplitude: f64,
}

/// Compares `φ_j` with `φ̂_j = A √u θ^{−1/4} J₁(√λ_j u)`, `u(x) = ∫₀ˣ√θ`,
/// normalized in `L²(θ dx)`.
pub fn bessel_comparison(model: &CoefficientModel, basis: &SpectralBasis, j: usize) -> Result<BesselComparison> {
    if j < 4 || j >= basis.n_modes() {
        return Err(Error::InvalidArgument(format!(
            "bessel comparison needs 4 <= j < {}, got {j}",
            basis.n_modes()
        )));
    }
    let phase = model.sqrt_theta_integral_on_grid(basis.interior_grid())?;
    let root = basis.eigenvalues()[j].sqrt();
    let shape: Vec<f64> = phase
        .iter()
        .zip(basis.theta())
        .map(|(&u, &t)| u.sqrt() * t.powf(-0.25) * libm::j1(root * u))
        .collect();
    let norm2: f64 = shape.iter().zip(basis.theta()).map(|(s, t)| s * s * t).sum::<f64>() * basis.h();
    let amplitude = 1.0 / norm2.sqrt();
    let sup_error = basis
        .interior_grid()
        .iter()
        .zip(&basis.phi()[j])
        .zip(&shape)
        .filter(|((x, _), _)| **x <= 0.5)
        .map(|((_, p), s)| (p - amplitude * s).abs())
        .fold(0.0, f64::max);
    Ok(BesselComparison {
        mode: j,
        sup_error,
        amplitude,
    })
}

/// Sequences whose boundedness over resolved modes is predicted by the
/// large-eigenvalue estimates.
#[derive(Debug, Clone)]
pub struct AsymptoticBounds {
    /// `‖φ_j‖_∞`.
    pub phi_sup: Vec<f64>,
    /// `‖q_j‖_∞ λ_j^{−3/4}`.
    pub q_sup_scaled: Vec<f64>,
    /// `|Q_j| λ_j^{1/4}`.
    pub q_integral_scaled: Vec<f64>,
    /// Least-squares slope of `log ‖φ_j‖_∞` against `log j`, `j ≥ 1`.
    pub phi_sup_loglog_slope: f64,
}

pub fn asymptotic_bounds(basis: &SpectralBasis, modes: usize) -> Result<AsymptoticBounds> {
    let t = basis.transforms()?;
    let m = modes.min(basis.n_modes());
    let lam = basis.eigenvalues();
    let phi_sup: Vec<f64> = basis.phi()[..m]
        .iter()
        .map(|v| v.iter().fold(0.0f64, |a, x| a.max(x.abs())))
        .collect();
    let q_sup_scaled = (0..m)
        .map(|j| t.q[j].iter().fold(0.0f64, |a, x| a.max(x.abs())) * lam[j].powf(-0.75))
        .collect();
    let q_integral_scaled = (0..m).map(|j| t.integrals[j].abs() * lam[j].powf(0.25)).collect();
    let xs: Vec<f64> = (1..m).map(|j| (j as f64).ln()).collect();
    let ys: Vec<f64> = phi_sup[1..].iter().map(|v| v.ln()).collect();
    let slope = if xs.len() >= 2 { linear_fit(&xs, &ys).0 } else { 0.0 };
    Ok(AsymptoticBounds {
        phi_sup,
        q_sup_scaled,
        q_integral_scaled,
        phi_sup_loglog_slope: slope,
    })
}

/// Number of sign changes in a sampled function, ignoring samples below
/// `1e-10` of its maximum magnitude.
pub fn sign_changes(values: &[f64]) -> usize {
    let cutoff = 1e-10 * values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in values.iter().filter(|v| v.abs() > cutoff) {
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn resolution_guard() {
        let m = CoefficientModel::neutral();
        assert!(matches!(solve_eigenproblem(&m, 3, 32), Err(Error::Resolution(_))));
        assert!(matches!(solve_eigenproblem(&m, 17, 128), Err(Error::Resolution(_))));
        assert!(matches!(solve_eigenproblem(&m, 0, 128), Err(Error::Resolution(_))));
    }

    #[test]
    fn neutral_low_modes() {
        let b = SpectralBasis::build(&CoefficientModel::neutral(), 6, 256).unwrap();
        for (j, l) in b.eigenvalues().iter().enumerate() {
            let exact = ((j + 1) * (j + 2)) as f64;
            assert_relative_eq!(*l, exact, max_relative = 1e-8);
        }
        assert!(b.gram_deviation() < 1e-10);
        for (j, v) in b.phi().iter().enumerate() {
            assert_eq!(sign_changes(v), j);
            assert!(v[0] > 0.0);
        }
    }

    #[test]
    fn neutral_first_mode_is_constant_after_transform() {
        let b = SpectralBasis::build(&CoefficientModel::neutral(), 4, 512).unwrap();
        let t = b.transforms().unwrap();
        let q0 = &t.q[0];
        // ∫ φ₀²θ = 1 with φ₀ = c x(1−x) gives c = √6
        for v in q0 {
            assert_relative_eq!(*v, 6f64.sqrt(), max_relative = 1e-9);
        }
        assert_relative_eq!(t.integrals[0] * b.eigenvalues()[0], t.left[0] + t.right[0], max_relative = 1e-10);
        // odd mode: zero integral, antisymmetric endpoint values
        assert!(t.integrals[1].abs() < 1e-7, "{}", t.integrals[1]);
        assert!((t.left[1] + t.right[1]).abs() < 1e-8 * t.left[1].abs(), "{} {}", t.left[1], t.right[1]);
    }

    #[test]
    fn missing_transform_is_reported() {
        let b = solve_eigenproblem(&CoefficientModel::neutral(), 4, 128).unwrap();
        assert!(matches!(identity_residuals(&b), Err(Error::MissingTransform)));
    }

    #[test]
    fn selection_model_raw_eigenvalues_converge_at_second_order() {
        let m = CoefficientModel::kimura(1.0, -0.5);
        let a = solve_eigenproblem(&m, 4, 128).unwrap();
        let b = solve_eigenproblem(&m, 4, 257).unwrap();
        let c = solve_eigenproblem(&m, 4, 515).unwrap();
        for j in 0..4 {
            let d1 = a.coarse_eigenvalues()[j] - b.coarse_eigenvalues()[j];
            let d2 = b.coarse_eigenvalues()[j] - c.coarse_eigenvalues()[j];
            let ratio = d1 / d2;
            assert!((3.5..4.5).contains(&ratio), "mode {j}: ratio {ratio}");
        }
    }

    #[test]
    fn sign_change_counter() {
        assert_eq!(sign_changes(&[1.0, 2.0, -1.0, 0.0, -3.0, 4.0]), 2);
        assert_eq!(sign_changes(&[0.0, 1.0, 1e-20, 1.0]), 0);
    }

    #[test]
    fn weyl_constant_neutral() {
        assert_relative_eq!(weyl_constant(&CoefficientModel::neutral()).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn bessel_precondition() {
        let m = CoefficientModel::neutral();
        let b = solve_eigenproblem(&m, 8, 128).unwrap();
        assert!(bessel_comparison(&m, &b, 3).is_err());
        assert!(bessel_comparison(&m, &b, 8).is_err());
        assert!(bessel_comparison(&m, &b, 5).is_ok());
    }
}
