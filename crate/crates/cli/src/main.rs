use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use kimura_cli::commands::{run_scenarios, Stage};
use kimura_cli::config::{load_scenarios, Overrides};
use kimura_cli::plot::emit_plot_data;
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectral solver and verification harness for the forward Kimura equation.
#[derive(Parser)]
#[command(name = "kimura", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output root; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    modes: Option<usize>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    cells: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Regularity index of the initial-data norm.
    #[arg(long, global = true)]
    s: Option<f64>,
    #[arg(long = "tol-mass", global = true)]
    tol_mass: Option<f64>,
    #[arg(long = "tol-route", global = true)]
    tol_route: Option<f64>,
    #[arg(long = "tol-positivity", global = true)]
    tol_positivity: Option<f64>,
    #[arg(long = "tol-identity", global = true)]
    tol_identity: Option<f64>,
    #[arg(long = "tol-radon", global = true)]
    tol_radon: Option<f64>,
    #[arg(long = "tol-fd", global = true)]
    tol_fd: Option<f64>,
    #[arg(long = "tol-weak", global = true)]
    tol_weak: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, endpoint data and growth diagnostics.
    Spectrum {
        /// Also write the eigenvector samples.
        #[arg(long)]
        eigenfunctions: bool,
    },
    /// Fixation probability on the grid.
    Fixation,
    /// Spectral evolution at the configured times.
    Evolve,
    /// Finite-difference and weak-form cross-checks.
    Verify,
    /// Liouville-Green comparison of the eigenfunctions.
    BesselCheck,
    /// Series CSV and SVG charts from existing results.
    Plot {
        /// Results directory; defaults to every scenario directory of `--config`.
        dir: Option<PathBuf>,
    },
    /// Spectrum, fixation, evolution and plots, plus verify when configured.
    Run,
}

impl Common {
    fn overrides(&self) -> Overrides {
        let tolerances = [
            ("mass", self.tol_mass),
            ("route", self.tol_route),
            ("positivity", self.tol_positivity),
            ("identity", self.tol_identity),
            ("radon", self.tol_radon),
            ("fd", self.tol_fd),
            ("weak", self.tol_weak),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect();
        Overrides {
            out: self.out.clone(),
            modes: self.modes,
            grid: self.grid,
            cells: self.cells,
            dt: self.dt,
            s: self.s,
            tolerances,
        }
    }
}

enum Outcome {
    Clean,
    Violations(Vec<String>),
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let stage = match &cli.command {
        Command::Spectrum { eigenfunctions } => Stage::Spectrum {
            eigenfunctions: *eigenfunctions,
        },
        Command::Fixation => Stage::Fixation,
        Command::Evolve => Stage::Evolve,
        Command::Verify => Stage::Verify,
        Command::BesselCheck => Stage::Bessel,
        Command::Run => Stage::All,
        Command::Plot { dir: Some(dir) } => {
            emit_plot_data(dir)?;
            return Ok(Outcome::Clean);
        }
        Command::Plot { dir: None } => {
            let Some(path) = &cli.common.config else {
                bail!("plot needs a results directory or --config");
            };
            for scn in load_scenarios(path, &cli.common.overrides())? {
                emit_plot_data(&scn.output_dir)?;
            }
            return Ok(Outcome::Clean);
        }
    };
    let Some(path) = &cli.common.config else {
        bail!("--config is required");
    };
    let scenarios = load_scenarios(path, &cli.common.overrides())?;
    let mut violations = Vec::new();
    let mut first_error = None;
    for (scn, result) in scenarios.iter().zip(run_scenarios(&scenarios, stage)) {
        match result {
            Ok(v) => {
                eprintln!("{}: {} -> {}", scn.name, if v.is_empty() { "ok" } else { "tolerance violation" }, scn.output_dir.display());
                violations.extend(v);
            }
            Err(e) => {
                eprintln!("{}: error: {e:#}", scn.name);
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    Ok(if violations.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Violations(violations)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violations(list)) => {
            for v in list {
                eprintln!("violation: {v}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
