//! Spectral solution of the forward Kolmogorov equation for one-locus,
//! two-allele Wright–Fisher diffusions with selection, allowing measure-valued
//! initial data and boundary atoms.

pub mod error;
pub mod evolution;
pub mod fd_oracle;
pub mod fixation;
pub mod interp;
pub mod model;
pub mod quadrature;
pub mod spectral;
pub mod tridiag;

pub use error::{Error, Result};
pub use evolution::{Density, Evolution, InitialMeasure, PointMass};
pub use fixation::{fixation_profile, FixationProfile};
pub use model::{CoefficientModel, Polynomial};
pub use spectral::{solve_eigenproblem, transform_eigenfunctions, SpectralBasis};
