//! Artifact schemas. Everything written to disk round-trips through these types.

use anyhow::{Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::path::Path;

pub const SPECTRUM_JSON: &str = "spectrum.json";
pub const EIGENFUNCTIONS_CSV: &str = "eigenfunctions.csv";
pub const FIXATION_CSV: &str = "fixation.csv";
pub const EVOLUTION_CSV: &str = "evolution.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const VERIFY_JSON: &str = "verify.json";
pub const BESSEL_JSON: &str = "bessel.json";
pub const SERIES_CSV: &str = "series.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub modes: usize,
    pub grid: usize,
    pub lambda: Vec<f64>,
    #[serde(rename = "K_estimate")]
    pub k_estimate: Option<f64>,
    pub weyl_constant: f64,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    pub q_left: Vec<f64>,
    pub q_right: Vec<f64>,
    pub identity_residuals: Vec<f64>,
    pub resolved_modes: usize,
    pub unstable_modes: Vec<usize>,
    pub gram_deviation: f64,
    pub phi_sup: Vec<f64>,
    pub q_sup_scaled: Vec<f64>,
    pub q_integral_scaled: Vec<f64>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationRow {
    pub x: f64,
    pub psi: f64,
}

/// One line of `evolution.csv`. `radon_to_limit` is empty for signed data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRow {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub q_l1: f64,
    pub mass_total: f64,
    pub psi_mass: f64,
    pub radon_to_limit: Option<f64>,
    pub trunc_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub x: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFile {
    pub t: f64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub mass_drift: f64,
    pub psi_mass_drift: f64,
    pub route_discrepancy: f64,
    pub min_density: f64,
    pub radon_identity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSummary {
    pub scenario: String,
    pub total_mass: f64,
    pub a_inf: f64,
    pub b_inf: f64,
    pub lambda0: f64,
    #[serde(rename = "C_inf")]
    pub c_inf: f64,
    /// Fitted slope of `log ‖q‖₁` over the positive output times.
    pub slope: Option<f64>,
    pub s: f64,
    pub ds_norm: f64,
    pub c0s: f64,
    /// Absent when the tail estimate is unbounded (`s = 0`).
    pub c0s_tail_bound: Option<f64>,
    pub radon_bound: Vec<f64>,
    pub residuals: Residuals,
    pub profiles: Vec<ProfileFile>,
    pub warnings: Vec<String>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdGap {
    pub t: f64,
    pub q_l1_diff: f64,
    pub a_diff: f64,
    pub b_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakFormResidual {
    pub t0: f64,
    pub t1: f64,
    pub chi: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub cells: usize,
    pub dt: f64,
    pub fd_steps: usize,
    pub gaps: Vec<FdGap>,
    pub fd_step_drift: f64,
    pub fd_min_density: f64,
    pub spectral_mass_drift: f64,
    pub spectral_psi_mass_drift: f64,
    pub weak_form: Vec<WeakFormResidual>,
    pub passed: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselEntry {
    pub mode: usize,
    pub sup_error: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselReport {
    pub entries: Vec<BesselEntry>,
    pub decreasing: bool,
}

/// Long-format row of `series.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub series: String,
    pub t: f64,
    pub value: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("missing input {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("missing input {}", path.display()))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
}
