use thiserror::Error;

/// Errors raised by the solver modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point x = {x} lies outside the admissible domain {domain}")]
    Domain { x: f64, domain: &'static str },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("quadrature did not converge on [{a}, {b}] (estimated error {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resolution guard violated: {0}")]
    Resolution(String),

    #[error("eigensolver failed for mode {mode}: {reason}")]
    EigenSolver { mode: usize, reason: String },

    #[error("smallest computed eigenvalue {0} is not positive; discretization failure")]
    NonPositiveEigenvalue(f64),

    #[error("spectral basis has no transformed eigenfunctions; call transform_eigenfunctions first")]
    MissingTransform,

    #[error("invalid initial measure: {0}")]
    InvalidInitial(String),

    #[error("negative mass gap {gap:e} at t = {t}: boundary masses exceed their limits")]
    NegativeMassGap { t: f64, gap: f64 },

    #[error("time step {dt} exceeds the mesh width {h}")]
    StepSize { dt: f64, h: f64 },

    #[error("density became negative ({min:e}) at t = {t}, beyond tolerance {tol:e}")]
    NegativeDensity { t: f64, min: f64, tol: f64 },

    #[error("mismatched output times: {0} vs {1}")]
    TimeMismatch(f64, f64),
}

pub type Result<T> = std::result::Result<T, Error>;
