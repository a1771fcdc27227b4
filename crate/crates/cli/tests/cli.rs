use kimura_cli::output::{EvolutionRow, EvolutionSummary, SpectrumReport, VerifyReport};
use serde::{de::DeserializeOwned, Serialize};
use std::path::Path;
use std::process::{Command, Output};

const SMALL: [&str; 6] = ["--modes", "32", "--grid", "2048", "--cells", "256"];

fn kimura(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kimura")).args(args).output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn neutral_uniform(dir: &Path) -> String {
    write_config(
        dir,
        r#"{"schema_version": 1, "name": "demo", "model": {"preset": "neutral"},
            "initial": {"density": "uniform"}, "times": [0, 0.1, 0.5, 1, 2], "verify": true}"#,
    )
}

fn read<T: DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn round_trips<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(path: &Path) {
    let value: T = read(path);
    let again: T = serde_json::from_str(&serde_json::to_string(&value).unwrap()).unwrap();
    assert_eq!(value, again, "{}", path.display());
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn neutral_demo_runs_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = neutral_uniform(tmp.path());
    let out_dir = tmp.path().join("out");
    let mut args = vec!["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()];
    args.extend(SMALL);
    let out = kimura(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for file in ["spectrum.json", "fixation.csv", "evolution.csv", "summary.json", "verify.json", "series.csv"] {
        assert!(out_dir.join(file).is_file(), "missing {file}");
    }
    let summary: EvolutionSummary = read(&out_dir.join("summary.json"));
    assert!((summary.a_inf - 0.5).abs() < 1e-12 && (summary.b_inf - 0.5).abs() < 1e-12);
    assert!(summary.violations.is_empty());

    round_trips::<SpectrumReport>(&out_dir.join("spectrum.json"));
    round_trips::<EvolutionSummary>(&out_dir.join("summary.json"));
    round_trips::<VerifyReport>(&out_dir.join("verify.json"));
    let header = std::fs::read_to_string(out_dir.join("evolution.csv")).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        "t,a,b,q_l1,mass_total,psi_mass,radon_to_limit,trunc_error"
    );
    let rows: Vec<EvolutionRow> = csv::Reader::from_path(out_dir.join("evolution.csv"))
        .unwrap()
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(rows.len(), 5);

    for svg in ["a.svg", "b.svg", "q_l1.svg", "scaled_l1.svg"] {
        assert!(std::fs::read_to_string(out_dir.join(svg)).unwrap().contains("<polyline"));
    }
    assert!(rows.windows(2).all(|w| w[1].a >= w[0].a));
    // uniform data is the leading neutral mode, so e^{λ₀t}‖q‖₁ stays put
    let series = std::fs::read_to_string(out_dir.join("series.csv")).unwrap();
    let scaled: Vec<f64> = series
        .lines()
        .filter(|l| l.starts_with("scaled_l1,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(scaled.len(), 5);
    assert!(scaled.iter().all(|v| (v - scaled[0]).abs() < 1e-5 * scaled[0]), "{scaled:?}");
}

#[test]
fn nonpositive_psi_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"schema_version": 1, "model": {"psi": [-2, 1], "pi": [0]}, "initial": {"density": "uniform"}}"#,
    );
    let out = kimura(&["evolve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("psi must be positive") && err.contains("model"), "{err}");
}

#[test]
fn malformed_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"schema_version": 1, "spectral": {"modes": -3}}"#);
    let out = kimura(&["spectrum", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("spectral.modes"), "{}", stderr(&out));
}

#[test]
fn tightened_verify_tolerances_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = neutral_uniform(tmp.path());
    let out_dir = tmp.path().join("verify");
    let mut args = vec!["verify", "--config", &cfg, "--out", out_dir.to_str().unwrap()];
    args.extend(SMALL);
    let out = kimura(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: VerifyReport = read(&out_dir.join("verify.json"));
    assert!(report.passed);
    let achieved = report
        .gaps
        .iter()
        .map(|g| g.q_l1_diff.max(g.a_diff).max(g.b_diff))
        .fold(0.0, f64::max);
    let tight = format!("{:e}", achieved / 100.0);
    args.extend(["--tol-fd", tight.as_str()]);
    let out = kimura(&args);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let report: VerifyReport = read(&out_dir.join("verify.json"));
    assert!(!report.passed && !report.violations.is_empty());
}

#[test]
fn spectrum_writes_eigenfunctions_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = neutral_uniform(tmp.path());
    let out_dir = tmp.path().join("spectrum");
    let mut args = vec!["spectrum", "--eigenfunctions", "--config", &cfg, "--out", out_dir.to_str().unwrap()];
    args.extend(SMALL);
    let out = kimura(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: SpectrumReport = read(&out_dir.join("spectrum.json"));
    assert_eq!(report.lambda.len(), 32);
    for (j, l) in report.lambda.iter().take(5).enumerate() {
        let exact = ((j + 1) * (j + 2)) as f64;
        assert!((l - exact).abs() < 1e-6 * exact);
    }
    let csv = std::fs::read_to_string(out_dir.join("eigenfunctions.csv")).unwrap();
    assert!(csv.starts_with("x,phi_0,phi_1"));
    assert_eq!(csv.lines().count(), 1 + 2048);
}

#[test]
fn plot_reports_missing_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = kimura(&["plot", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("evolution.csv"), "{}", stderr(&out));
}

#[test]
fn scenarios_run_concurrently_into_separate_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"schema_version": 1, "model": {"preset": "neutral"}, "times": [0.5, 1],
            "scenarios": [
              {"name": "atom", "initial": {"atoms": [{"x": 0.3, "mass": 1}]}},
              {"name": "bump", "model": {"preset": "kimura", "eta": 1, "beta": -0.5},
               "initial": {"density": {"bump": {"center": 0.4, "width": 0.2}}}}
            ]}"#,
    );
    let root = tmp.path().join("multi");
    let mut args = vec!["evolve", "--config", &cfg, "--out", root.to_str().unwrap()];
    args.extend(SMALL);
    let out = kimura(&args);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let atom: EvolutionSummary = read(&root.join("atom/summary.json"));
    assert!((atom.a_inf - 0.7).abs() < 1e-12 && (atom.b_inf - 0.3).abs() < 1e-12);
    let first = std::fs::read(root.join("bump/summary.json")).unwrap();

    // identical config, identical bytes
    let out = kimura(&args);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(first, std::fs::read(root.join("bump/summary.json")).unwrap());
}
