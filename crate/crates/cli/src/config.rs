//! Scenario configuration files.
//!
//! A config is a JSON object with `schema_version` and either a single
//! scenario at the top level or a `scenarios` array. Fields left out take the
//! defaults below.

use anyhow::{anyhow, bail, Context, Result};
use kimura_core::evolution::{Density, InitialMeasure, PointMass};
use kimura_core::CoefficientModel;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub spectral: Option<SpectralConfig>,
    #[serde(default)]
    pub fd: Option<FdConfig>,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub verify: Option<bool>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub scenarios: Option<Vec<ScenarioEntry>>,
}

/// One entry of `scenarios`. Unset fields fall back to the top level.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub name: String,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub spectral: Option<SpectralConfig>,
    #[serde(default)]
    pub fd: Option<FdConfig>,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub verify: Option<bool>,
}

/// `{"preset": "kimura", "eta": η, "beta": β}`, `{"preset": "neutral"}` or
/// `{"psi": [...], "pi": [...]}` with ascending polynomial coefficients.
#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub psi: Option<Vec<f64>>,
    #[serde(default)]
    pub pi: Option<Vec<f64>>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<CoefficientModel> {
        match (self.preset.as_deref(), &self.psi, &self.pi) {
            (Some("neutral"), None, None) => Ok(CoefficientModel::neutral()),
            (Some("kimura"), None, None) => Ok(CoefficientModel::kimura(
                self.eta.unwrap_or(0.0),
                self.beta.unwrap_or(0.0),
            )),
            (Some(other), None, None) => bail!("unknown preset {other:?} (expected \"kimura\" or \"neutral\")"),
            (None, Some(psi), pi) => {
                if self.eta.is_some() || self.beta.is_some() {
                    bail!("eta/beta only apply to the kimura preset");
                }
                let pi = pi.clone().unwrap_or_else(|| vec![0.0]);
                CoefficientModel::new(psi.clone(), pi).map_err(|e| anyhow!("{e}"))
            }
            _ => bail!("give either a preset or psi/pi coefficients"),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
pub enum DensityConfig {
    Zero,
    Uniform,
    Bump { center: f64, width: f64 },
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub x: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub a0: f64,
    #[serde(default)]
    pub b0: f64,
    #[serde(default = "default_density")]
    pub density: DensityConfig,
    #[serde(default)]
    pub atoms: Vec<AtomConfig>,
}

fn default_density() -> DensityConfig {
    DensityConfig::Zero
}

impl InitialConfig {
    pub fn build(&self) -> Result<InitialMeasure> {
        let density = match &self.density {
            DensityConfig::Zero => Density::Zero,
            DensityConfig::Uniform => Density::Uniform,
            DensityConfig::Bump { center, width } => Density::Bump {
                center: *center,
                width: *width,
            },
            DensityConfig::Samples(v) => Density::Samples(v.clone()),
        };
        let atoms = self.atoms.iter().map(|a| PointMass { x: a.x, mass: a.mass }).collect();
        InitialMeasure::new(self.a0, self.b0, density, atoms).map_err(|e| anyhow!("{e}"))
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_modes() -> usize {
    64
}

fn default_grid() -> usize {
    2048
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            grid: default_grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FdConfig {
    #[serde(default = "default_cells")]
    pub cells: usize,
    /// Defaults to the mesh width.
    #[serde(default)]
    pub dt: Option<f64>,
}

fn default_cells() -> usize {
    1024
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            cells: default_cells(),
            dt: None,
        }
    }
}

impl FdConfig {
    pub fn step(&self) -> f64 {
        self.dt.unwrap_or(1.0 / self.cells as f64)
    }
}

/// Invariant tolerances; masses are relative to the initial total mass.
#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub mass_drift: f64,
    pub route_agreement: f64,
    pub positivity: f64,
    pub identity: f64,
    pub radon_identity: f64,
    pub fd_gap: f64,
    pub weak_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mass_drift: 1e-5,
            route_agreement: 1e-5,
            positivity: 1e-8,
            identity: 1e-4,
            radon_identity: 1e-6,
            fd_gap: 1e-3,
            weak_form: 1e-5,
        }
    }
}

/// Fully resolved scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model_config: ModelConfig,
    pub model: CoefficientModel,
    pub initial: InitialMeasure,
    pub times: Vec<f64>,
    pub spectral: SpectralConfig,
    pub fd: FdConfig,
    pub s: f64,
    pub tolerances: Tolerances,
    pub verify: bool,
    pub output_dir: PathBuf,
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub modes: Option<usize>,
    pub grid: Option<usize>,
    pub cells: Option<usize>,
    pub dt: Option<f64>,
    pub s: Option<f64>,
    pub tolerances: Vec<(String, f64)>,
}

fn default_times() -> Vec<f64> {
    vec![0.0, 0.1, 0.5, 1.0, 2.0]
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("config field `{path}`: {}", e.into_inner())
    })?;
    if cfg.schema_version != SCHEMA_VERSION {
        bail!(
            "config field `schema_version`: unsupported version {} (expected {SCHEMA_VERSION})",
            cfg.schema_version
        );
    }
    Ok(cfg)
}

pub fn load_scenarios(path: &Path, overrides: &Overrides) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let cfg = parse_config(&text)?;
    resolve(&cfg, overrides, path.parent().unwrap_or(Path::new(".")))
}

pub fn resolve(cfg: &ConfigFile, overrides: &Overrides, base: &Path) -> Result<Vec<Scenario>> {
    let root = match (&overrides.out, &cfg.output_dir) {
        (Some(out), _) => out.clone(),
        (None, Some(dir)) if dir.is_absolute() => dir.clone(),
        (None, Some(dir)) => base.join(dir),
        (None, None) => PathBuf::from("results"),
    };
    let top = ScenarioEntry {
        name: cfg.name.clone().unwrap_or_else(|| "scenario".into()),
        model: cfg.model.clone(),
        initial: cfg.initial.clone(),
        times: cfg.times.clone(),
        spectral: cfg.spectral,
        fd: cfg.fd,
        s: cfg.s,
        tolerances: cfg.tolerances,
        verify: cfg.verify,
    };
    match &cfg.scenarios {
        None => Ok(vec![finish(&top, &top, overrides, root, "")?]),
        Some(list) if list.is_empty() => bail!("config field `scenarios`: empty list"),
        Some(list) => {
            let mut names = std::collections::HashSet::new();
            list.iter()
                .enumerate()
                .map(|(i, entry)| {
                    if !names.insert(entry.name.clone()) {
                        bail!("config field `scenarios[{i}].name`: duplicate name {:?}", entry.name);
                    }
                    if entry.name.is_empty() || entry.name.contains(['/', '\\']) || entry.name.starts_with('.') {
                        bail!("config field `scenarios[{i}].name`: {:?} is not a valid directory name", entry.name);
                    }
                    finish(entry, &top, overrides, root.join(&entry.name), &format!("scenarios[{i}]."))
                })
                .collect()
        }
    }
}

fn finish(entry: &ScenarioEntry, top: &ScenarioEntry, ov: &Overrides, dir: PathBuf, prefix: &str) -> Result<Scenario> {
    let model_config = entry
        .model
        .clone()
        .or_else(|| top.model.clone())
        .ok_or_else(|| anyhow!("config field `{prefix}model`: missing"))?;
    let model = model_config.build().map_err(|e| anyhow!("config field `{prefix}model`: {e}"))?;
    let initial = entry
        .initial
        .clone()
        .or_else(|| top.initial.clone())
        .ok_or_else(|| anyhow!("config field `{prefix}initial`: missing"))?
        .build()
        .map_err(|e| anyhow!("config field `{prefix}initial`: {e}"))?;

    let times = entry.times.clone().or_else(|| top.times.clone()).unwrap_or_else(default_times);
    if times.is_empty() {
        bail!("config field `{prefix}times`: empty");
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] <= w[0]) {
        bail!("config field `{prefix}times`: must be strictly increasing and nonnegative");
    }

    let mut spectral = entry.spectral.or(top.spectral).unwrap_or_default();
    spectral.modes = ov.modes.unwrap_or(spectral.modes);
    spectral.grid = ov.grid.unwrap_or(spectral.grid);
    if spectral.grid < kimura_core::spectral::MIN_GRID || spectral.modes == 0 || spectral.modes > spectral.grid / 8 {
        bail!(
            "config field `{prefix}spectral`: need grid >= {} and 1 <= modes <= grid/8 (got modes {}, grid {})",
            kimura_core::spectral::MIN_GRID,
            spectral.modes,
            spectral.grid
        );
    }

    let mut fd = entry.fd.or(top.fd).unwrap_or_default();
    fd.cells = ov.cells.unwrap_or(fd.cells);
    if ov.dt.is_some() {
        fd.dt = ov.dt;
    }
    if fd.cells < kimura_core::fd_oracle::MIN_CELLS {
        bail!("config field `{prefix}fd.cells`: {} < {}", fd.cells, kimura_core::fd_oracle::MIN_CELLS);
    }
    let h = 1.0 / fd.cells as f64;
    if !(fd.step() > 0.0 && fd.step() <= h) {
        bail!("config field `{prefix}fd.dt`: {} must lie in (0, h = {h}]", fd.step());
    }

    let s = ov.s.or(entry.s).or(top.s).unwrap_or(1.0);
    if !(s >= 0.0 && s.is_finite()) {
        bail!("config field `{prefix}s`: must be nonnegative");
    }

    let mut tolerances = entry.tolerances.or(top.tolerances).unwrap_or_default();
    for (key, value) in &ov.tolerances {
        let slot = match key.as_str() {
            "mass" | "mass_drift" => &mut tolerances.mass_drift,
            "route" | "route_agreement" => &mut tolerances.route_agreement,
            "positivity" => &mut tolerances.positivity,
            "identity" => &mut tolerances.identity,
            "radon" | "radon_identity" => &mut tolerances.radon_identity,
            "fd" | "fd_gap" => &mut tolerances.fd_gap,
            "weak" | "weak_form" => &mut tolerances.weak_form,
            other => bail!("unknown tolerance {other:?}"),
        };
        *slot = *value;
    }

    Ok(Scenario {
        name: entry.name.clone(),
        model_config,
        model,
        initial,
        times,
        spectral,
        fd,
        s,
        tolerances,
        verify: entry.verify.or(top.verify).unwrap_or(false),
        output_dir: dir,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_text(text: &str) -> Result<Vec<Scenario>> {
        resolve(&parse_config(text)?, &Overrides::default(), Path::new("."))
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let s = resolve_text(
            r#"{"schema_version": 1, "model": {"preset": "neutral"}, "initial": {"density": "uniform"}}"#,
        )
        .unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].spectral, SpectralConfig { modes: 64, grid: 2048 });
        assert_eq!(s[0].fd.cells, 1024);
        assert_eq!(s[0].fd.step(), 1.0 / 1024.0);
        assert_eq!(s[0].s, 1.0);
        assert_eq!(s[0].tolerances, Tolerances::default());
    }

    #[test]
    fn field_paths_are_reported() {
        let e = resolve_text(r#"{"schema_version": 1, "spectral": {"modes": "many"}}"#).unwrap_err();
        assert!(e.to_string().contains("spectral.modes"), "{e}");
        let e = resolve_text(r#"{"schema_version": 1, "initial": {"density": {"bump": {"center": 0.5}}}}"#).unwrap_err();
        assert!(e.to_string().contains("initial.density"), "{e}");
        let e = resolve_text(r#"{"schema_version": 2}"#).unwrap_err();
        assert!(e.to_string().contains("schema_version"), "{e}");
    }

    #[test]
    fn negative_psi_is_rejected() {
        let e = resolve_text(
            r#"{"schema_version": 1, "model": {"psi": [-2, 1], "pi": [0]}, "initial": {"density": "uniform"}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("psi must be positive"), "{e}");
    }

    #[test]
    fn scenarios_inherit_top_level_fields() {
        let s = resolve_text(
            r#"{"schema_version": 1, "model": {"preset": "neutral"}, "times": [0.5, 1],
                "scenarios": [
                  {"name": "a", "initial": {"atoms": [{"x": 0.3, "mass": 1}]}},
                  {"name": "b", "model": {"preset": "kimura", "eta": 1, "beta": -0.5}, "initial": {"density": {"bump": {"center": 0.4, "width": 0.2}}}}
                ]}"#,
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].times, vec![0.5, 1.0]);
        assert!(s[1].output_dir.ends_with("b"));
        let e = resolve_text(r#"{"schema_version": 1, "scenarios": [{"name": "x"}]}"#).unwrap_err();
        assert!(e.to_string().contains("scenarios[0].model"), "{e}");
    }

    #[test]
    fn bad_times_and_resolution() {
        let base = r#""model": {"preset": "neutral"}, "initial": {"density": "uniform"}"#;
        assert!(resolve_text(&format!(r#"{{"schema_version": 1, {base}, "times": [1, 0.5]}}"#)).is_err());
        assert!(resolve_text(&format!(r#"{{"schema_version": 1, {base}, "spectral": {{"modes": 64, "grid": 256}}}}"#)).is_err());
        assert!(resolve_text(&format!(r#"{{"schema_version": 1, {base}, "fd": {{"cells": 256, "dt": 0.01}}}}"#)).is_err());
    }
}
