use crate::error::{Error, Result};
use crate::interp::lagrange_uniform;
use crate::quadrature::{gregory_weights, weighted_sum};
use crate::spectral::SpectralBasis;

/// Interior point mass `m δ_x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMass {
    pub x: f64,
    pub mass: f64,
}

/// Absolutely continuous part of the initial measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Zero,
    /// `q⁰ ≡ 1`.
    Uniform,
    /// Unit-mass smooth bump `∝ exp(−1/(1−s²))`, `s = (x − center)/width`.
    Bump { center: f64, width: f64 },
    /// Samples on the uniform grid `i/(len−1)`, linearly interpolated.
    Samples(Vec<f64>),
}

const BUMP_MASS_NODES: usize = 4000;

impl Density {
    pub fn value_at(&self, x: f64) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Uniform => 1.0,
            Density::Bump { center, width } => bump_shape((x - center) / width) / (bump_integral() * width),
            Density::Samples(v) => {
                let n = v.len() - 1;
                let pos = (x.clamp(0.0, 1.0) * n as f64).min(n as f64);
                let i = (pos.floor() as usize).min(n - 1);
                let s = pos - i as f64;
                v[i] * (1.0 - s) + v[i + 1] * s
            }
        }
    }

    /// `∫₀¹ q⁰`.
    pub fn mass(&self) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Uniform | Density::Bump { .. } => 1.0,
            Density::Samples(v) => {
                let h = 1.0 / (v.len() - 1) as f64;
                v.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum()
            }
        }
    }

    fn validate(&self, signed: bool) -> Result<()> {
        match self {
            Density::Zero | Density::Uniform => Ok(()),
            Density::Bump { center, width } => {
                if !(width.is_finite() && *width > 0.0 && center - width >= 0.0 && center + width <= 1.0) {
                    return Err(Error::InvalidInitial(format!(
                        "bump(center = {center}, width = {width}) must have support inside [0, 1]"
                    )));
                }
                Ok(())
            }
            Density::Samples(v) => {
                if v.len() < 2 {
                    return Err(Error::InvalidInitial("density needs at least 2 samples".into()));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInitial("density samples must be finite".into()));
                }
                if !signed {
                    if let Some(bad) = v.iter().find(|x| **x < 0.0) {
                        return Err(Error::InvalidInitial(format!("density sample {bad} is negative")));
                    }
                }
                Ok(())
            }
        }
    }
}

fn bump_shape(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

// ∫_{−1}^{1} exp(−1/(1−s²)) ds
fn bump_integral() -> f64 {
    use std::sync::OnceLock;
    static VALUE: OnceLock<f64> = OnceLock::new();
    *VALUE.get_or_init(|| {
        // integrand is flat to all orders at ±1, so the midpoint rule converges spectrally
        let h = 2.0 / BUMP_MASS_NODES as f64;
        (0..BUMP_MASS_NODES)
            .map(|i| bump_shape(-1.0 + (i as f64 + 0.5) * h))
            .sum::<f64>()
            * h
    })
}

/// `p⁰ = a⁰δ₀ + q⁰ + Σ m_k δ_{x_k} + b⁰δ₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialMeasure {
    pub a0: f64,
    pub b0: f64,
    pub density: Density,
    pub atoms: Vec<PointMass>,
    signed: bool,
}

impl InitialMeasure {
    pub fn new(a0: f64, b0: f64, density: Density, atoms: Vec<PointMass>) -> Result<Self> {
        let init = Self {
            a0,
            b0,
            density,
            atoms,
            signed: false,
        };
        init.validate()?;
        Ok(init)
    }

    /// Interior density only.
    pub fn density(density: Density) -> Result<Self> {
        Self::new(0.0, 0.0, density, Vec::new())
    }

    /// `m δ_x`.
    pub fn dirac(x: f64, mass: f64) -> Result<Self> {
        Self::new(0.0, 0.0, Density::Zero, vec![PointMass { x, mass }])
    }

    /// Signed interior samples. Not a measure; used for perturbations such as
    /// data orthogonal to the first mode. Positivity-dependent diagnostics do
    /// not apply.
    pub fn signed(samples: Vec<f64>) -> Result<Self> {
        let init = Self {
            a0: 0.0,
            b0: 0.0,
            density: Density::Samples(samples),
            atoms: Vec::new(),
            signed: true,
        };
        init.validate()?;
        Ok(init)
    }

    /// Density whose transform is the discrete eigenvector `φ_j`, sampled on the
    /// basis's closed grid. Its projection is the `j`-th unit vector.
    pub fn single_mode(basis: &SpectralBasis, j: usize) -> Result<Self> {
        let t = basis.transforms()?;
        if j >= basis.n_modes() {
            return Err(Error::InvalidArgument(format!("mode {j} not in basis")));
        }
        let n = basis.interior_grid().len();
        let mut v = Vec::with_capacity(n + 2);
        v.push(t.left[j]);
        for i in 0..n {
            // 1/(x(1−x)Ψ) = θ
            let e = (0.5 * basis.xi_integral()[i + 1]).exp();
            v.push(e * basis.phi()[j][i] * basis.theta()[i]);
        }
        v.push(t.right[j]);
        let signed = v.iter().any(|x| *x < 0.0);
        let init = Self {
            a0: 0.0,
            b0: 0.0,
            density: Density::Samples(v),
            atoms: Vec::new(),
            signed,
        };
        init.validate()?;
        Ok(init)
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a0.is_finite() && self.a0 >= 0.0 && self.b0.is_finite() && self.b0 >= 0.0) {
            return Err(Error::InvalidInitial(format!(
                "boundary masses must be nonnegative, got a0 = {}, b0 = {}",
                self.a0, self.b0
            )));
        }
        self.density.validate(self.signed)?;
        for atom in &self.atoms {
            if !(atom.x > 0.0 && atom.x < 1.0) {
                return Err(Error::InvalidInitial(format!(
                    "atom at x = {} is not strictly interior",
                    atom.x
                )));
            }
            if !(atom.mass.is_finite() && atom.mass > 0.0) {
                return Err(Error::InvalidInitial(format!("atom mass {} is not positive", atom.mass)));
            }
        }
        let total = self.total_mass();
        if !self.signed && !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidInitial(format!("total mass {total} must be positive")));
        }
        Ok(())
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.a0 + self.b0 + self.density.mass() + self.atom_mass()
    }

    /// `q⁰` on a grid.
    pub fn density_on(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&x| self.density.value_at(x)).collect()
    }
}

/// Projection `ŵ⁰(j) = (w⁰, φ_j)_θ` onto the computed basis.
#[derive(Debug, Clone)]
pub struct SpectralCoefficients {
    pub what_hat: Vec<f64>,
    /// Leading modes used in series evaluation.
    pub modes_used: usize,
    /// `q⁰` on the basis's closed grid; returned at `t = 0`.
    pub initial_samples: Vec<f64>,
    /// Interior atoms of the data; part of the measure at `t = 0` only.
    pub initial_atoms: Vec<PointMass>,
}

impl SpectralCoefficients {
    /// `(Σ ŵ⁰(j)²)^{1/2}` over the modes in use.
    pub fn l2_norm(&self) -> f64 {
        self.what_hat[..self.modes_used].iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// `ŵ⁰(j) = ∫ q⁰ e^{−½∫₀ˣΞ} φ_j dx + Σ_k m_k e^{−½∫₀^{x_k}Ξ} φ_j(x_k)`.
///
/// The integral uses the discrete inner product of the basis, under which the
/// computed `φ_j` are exactly orthonormal.
pub fn project_initial(basis: &SpectralBasis, init: &InitialMeasure) -> Result<SpectralCoefficients> {
    init.validate()?;
    let interior = basis.interior_grid();
    let h = basis.h();
    let xi = basis.xi_integral();
    let closed_samples = init.density_on(basis.closed_grid());

    let weighted: Vec<f64> = (0..interior.len())
        .map(|i| closed_samples[i + 1] * (-0.5 * xi[i + 1]).exp())
        .collect();
    let mut what_hat: Vec<f64> = basis
        .phi()
        .iter()
        .map(|phi| h * phi.iter().zip(&weighted).map(|(a, b)| a * b).sum::<f64>())
        .collect();

    for atom in &init.atoms {
        let damp = (-0.5 * lagrange_uniform(xi, 0.0, h, atom.x)).exp();
        for (w, phi) in what_hat.iter_mut().zip(basis.phi()) {
            let mut closed = Vec::with_capacity(phi.len() + 2);
            closed.push(0.0);
            closed.extend_from_slice(phi);
            closed.push(0.0);
            *w += atom.mass * damp * lagrange_uniform(&closed, 0.0, h, atom.x);
        }
    }
    Ok(SpectralCoefficients {
        what_hat,
        modes_used: basis.resolved_modes(),
        initial_samples: closed_samples,
        initial_atoms: init.atoms.clone(),
    })
}

/// `∫₀¹ f` for samples on the basis's closed grid.
pub(crate) fn closed_integral(basis: &SpectralBasis, values: &[f64]) -> f64 {
    weighted_sum(&gregory_weights(values.len(), basis.h()), values)
}
