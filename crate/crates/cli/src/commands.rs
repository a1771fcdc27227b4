//! Subcommand pipelines. Each returns the list of tolerance violations; input
//! and module errors come back as `Err`.

use crate::config::Scenario;
use crate::output::*;
use crate::plot;
use anyhow::{bail, Context, Result};
use kimura_core::evolution::{verify_weak_form, weak_form_library};
use kimura_core::evolution::{decay_constant, ds_norm};
use kimura_core::fd_oracle::{compare_with_spectral, evolve_fd};
use kimura_core::spectral::{
    asymptotic_bounds, bessel_comparison, eigenvalue_growth, identity_residuals, weyl_constant,
};
use kimura_core::{fixation_profile, Error as CoreError, Evolution, SpectralBasis};
use std::path::Path;

/// Modes checked against the endpoint identity.
const IDENTITY_MODES: usize = 32;
const BESSEL_MODES: [usize; 4] = [4, 8, 16, 32];

fn prepare(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Mass scale for relative tolerances; odd data has zero net mass.
fn mass_scale(total: f64) -> f64 {
    if total.abs() > 0.0 {
        total.abs()
    } else {
        1.0
    }
}

pub fn build_basis(scn: &Scenario) -> Result<SpectralBasis> {
    SpectralBasis::build(&scn.model, scn.spectral.modes, scn.spectral.grid)
        .with_context(|| format!("scenario {}: spectral solve", scn.name))
}

pub fn build_evolution(scn: &Scenario, basis: SpectralBasis) -> Result<Evolution> {
    Evolution::new(&scn.model, basis, scn.initial.clone())
        .with_context(|| format!("scenario {}: projecting the initial measure", scn.name))
}

pub fn spectrum(scn: &Scenario, basis: &SpectralBasis, eigenfunctions: bool) -> Result<SpectrumReport> {
    prepare(&scn.output_dir)?;
    let tr = basis.transforms()?;
    let resolved = basis.resolved_modes();
    let checked = resolved.min(IDENTITY_MODES);
    let identity = identity_residuals(basis)?[..checked].to_vec();
    let mut violations = Vec::new();
    for (j, r) in identity.iter().enumerate() {
        if !(*r <= scn.tolerances.identity) {
            violations.push(format!("endpoint identity residual {r:.3e} for mode {j} exceeds {:.1e}", scn.tolerances.identity));
        }
    }
    let k_estimate = eigenvalue_growth(basis).ok().map(|g| g.k_estimate);
    let bounds = asymptotic_bounds(basis, resolved)?;
    let report = SpectrumReport {
        modes: basis.n_modes(),
        grid: scn.spectral.grid,
        lambda: basis.eigenvalues().to_vec(),
        k_estimate,
        weyl_constant: weyl_constant(&scn.model)?,
        q: tr.integrals.clone(),
        q_left: tr.left.clone(),
        q_right: tr.right.clone(),
        identity_residuals: identity,
        resolved_modes: resolved,
        unstable_modes: tr.unstable.clone(),
        gram_deviation: basis.gram_deviation(),
        phi_sup: bounds.phi_sup,
        q_sup_scaled: bounds.q_sup_scaled,
        q_integral_scaled: bounds.q_integral_scaled,
        violations,
    };
    write_json(&scn.output_dir.join(SPECTRUM_JSON), &report)?;
    if eigenfunctions {
        write_eigenfunctions(&scn.output_dir.join(EIGENFUNCTIONS_CSV), basis)?;
    }
    Ok(report)
}

fn write_eigenfunctions(path: &Path, basis: &SpectralBasis) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["x".to_string()];
    header.extend((0..basis.n_modes()).map(|j| format!("phi_{j}")));
    w.write_record(&header)?;
    for (i, x) in basis.interior_grid().iter().enumerate() {
        let mut record = vec![x.to_string()];
        record.extend(basis.phi().iter().map(|p| p[i].to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn fixation(scn: &Scenario) -> Result<()> {
    prepare(&scn.output_dir)?;
    let profile = fixation_profile(&scn.model, scn.spectral.grid + 1)?;
    let rows: Vec<FixationRow> = profile
        .grid()
        .iter()
        .zip(profile.values())
        .map(|(&x, &psi)| FixationRow { x, psi })
        .collect();
    write_csv(&scn.output_dir.join(FIXATION_CSV), &rows)
}

pub fn evolve(scn: &Scenario, ev: &Evolution) -> Result<EvolutionSummary> {
    prepare(&scn.output_dir)?;
    let tol = &scn.tolerances;
    let scale = mass_scale(ev.total_mass);
    let signed = ev.init.is_signed();
    let psi = ev.psi();
    let sols = ev.solutions(&scn.times)?;

    let mut rows = Vec::with_capacity(sols.len());
    let mut profiles = Vec::with_capacity(sols.len());
    let mut warnings = Vec::new();
    let mut violations = Vec::new();
    let mut residuals = Residuals {
        mass_drift: 0.0,
        psi_mass_drift: 0.0,
        route_discrepancy: 0.0,
        min_density: f64::INFINITY,
        radon_identity: if signed { None } else { Some(0.0) },
    };
    let grid = ev.basis.closed_grid();
    for (i, s) in sols.iter().enumerate() {
        let radon = if signed {
            None
        } else {
            match ev.radon_distance(s) {
                Ok(r) => Some(r),
                Err(CoreError::NegativeMassGap { t, gap }) => {
                    violations.push(format!("boundary mass exceeds its limit by {:.3e} at t = {t}", -gap));
                    None
                }
                Err(e) => return Err(e.into()),
            }
        };
        let row = EvolutionRow {
            t: s.t,
            a: s.a,
            b: s.b,
            q_l1: s.interior_l1(),
            mass_total: s.total_mass(),
            psi_mass: s.psi_mass(psi),
            radon_to_limit: radon,
            trunc_error: s.truncation_estimate,
        };
        residuals.mass_drift = residuals.mass_drift.max((row.mass_total - ev.total_mass).abs());
        residuals.psi_mass_drift = residuals.psi_mass_drift.max((row.psi_mass - ev.limits.b_inf).abs());
        residuals.route_discrepancy = residuals.route_discrepancy.max(ev.cross_check(s.t)?.discrepancy);
        residuals.min_density = residuals.min_density.min(s.min_density());
        if let (Some(r), Some(worst)) = (radon, residuals.radon_identity.as_mut()) {
            *worst = worst.max((r - 2.0 * row.q_l1).abs());
        }
        if ev.truncation_warning(s) {
            warnings.push(format!("truncation estimate {:.3e} at t = {} exceeds the warning level", s.truncation_estimate, s.t));
        }
        let file = format!("q_{i:03}.csv");
        let profile: Vec<ProfileRow> = grid.iter().zip(&s.q_samples).map(|(&x, &q)| ProfileRow { x, q }).collect();
        write_csv(&scn.output_dir.join(&file), &profile)?;
        profiles.push(ProfileFile { t: s.t, file });
        rows.push(row);
    }
    write_csv(&scn.output_dir.join(EVOLUTION_CSV), &rows)?;

    if residuals.mass_drift > tol.mass_drift * scale {
        violations.push(format!("mass drift {:.3e} exceeds {:.1e}·M", residuals.mass_drift, tol.mass_drift));
    }
    if residuals.psi_mass_drift > tol.mass_drift * scale {
        violations.push(format!("psi-mass drift {:.3e} exceeds {:.1e}·M", residuals.psi_mass_drift, tol.mass_drift));
    }
    if residuals.route_discrepancy > tol.route_agreement * scale {
        violations.push(format!(
            "boundary-mass routes differ by {:.3e}, above {:.1e}·M",
            residuals.route_discrepancy, tol.route_agreement
        ));
    }
    if !signed && residuals.min_density < -tol.positivity * scale {
        violations.push(format!("density minimum {:.3e} is below -{:.1e}·M", residuals.min_density, tol.positivity));
    }
    if let Some(r) = residuals.radon_identity {
        if r > tol.radon_identity * scale {
            violations.push(format!("radon identity residual {r:.3e} exceeds {:.1e}·M", tol.radon_identity));
        }
    }

    let lam0 = ev.basis.eigenvalues()[0];
    let positive: Vec<f64> = scn.times.iter().copied().filter(|t| *t > 0.0).collect();
    let slope = if positive.len() >= 2 {
        let decay = ev.decay(&positive)?;
        if decay.degenerate {
            warnings.push("leading coefficient vanishes; decay is set by a higher mode".into());
        }
        Some(decay.slope)
    } else {
        None
    };
    if ev.basis.resolved_modes() < ev.basis.n_modes() {
        warnings.push(format!(
            "only {} of {} modes have stable endpoint values; the rest are dropped",
            ev.basis.resolved_modes(),
            ev.basis.n_modes()
        ));
    }
    let c0s = decay_constant(&ev.basis, scn.s)?;
    let summary = EvolutionSummary {
        scenario: scn.name.clone(),
        total_mass: ev.total_mass,
        a_inf: ev.limits.a_inf,
        b_inf: ev.limits.b_inf,
        lambda0: lam0,
        c_inf: ev.basis.transforms()?.integrals[0] * ev.coeffs.what_hat[0],
        slope,
        s: scn.s,
        ds_norm: ds_norm(&ev.coeffs, &ev.basis, scn.s)?,
        c0s: c0s.value,
        c0s_tail_bound: c0s.tail_bound.is_finite().then_some(c0s.tail_bound),
        radon_bound: scn.times.iter().map(|&t| ev.radon_bound(scn.s, t)).collect::<Result<_, _>>()?,
        residuals,
        profiles,
        warnings,
        violations,
    };
    write_json(&scn.output_dir.join(SUMMARY_JSON), &summary)?;
    Ok(summary)
}

pub fn verify(scn: &Scenario, ev: &Evolution) -> Result<VerifyReport> {
    prepare(&scn.output_dir)?;
    let tol = &scn.tolerances;
    let scale = mass_scale(ev.total_mass);
    let times: Vec<f64> = scn.times.iter().copied().filter(|t| *t > 0.0).collect();
    if times.is_empty() {
        bail!("scenario {}: verify needs at least one positive output time", scn.name);
    }
    let dt = scn.fd.step();
    let mut violations = Vec::new();

    let sols = ev.solutions(&times)?;
    let (spectral_mass_drift, spectral_psi_mass_drift) = if sols.len() >= 2 {
        ev.conservation(&sols)?
    } else {
        let s = &sols[0];
        ((s.total_mass() - ev.total_mass).abs(), (s.psi_mass(ev.psi()) - ev.limits.b_inf).abs())
    };
    if spectral_mass_drift.max(spectral_psi_mass_drift) > tol.mass_drift * scale {
        violations.push(format!(
            "spectral conservation drift {:.3e} exceeds {:.1e}·M",
            spectral_mass_drift.max(spectral_psi_mass_drift),
            tol.mass_drift
        ));
    }

    let (gaps, fd_steps, fd_step_drift, fd_min_density) =
        match evolve_fd(&scn.model, &scn.initial, &times, scn.fd.cells, dt) {
            Ok(run) => {
                let gaps: Vec<FdGap> = compare_with_spectral(&run.states, &sols)?
                    .into_iter()
                    .map(|c| FdGap {
                        t: c.t,
                        q_l1_diff: c.q_l1_diff,
                        a_diff: c.a_diff,
                        b_diff: c.b_diff,
                    })
                    .collect();
                (gaps, run.steps, run.max_step_drift, run.min_density)
            }
            Err(CoreError::NegativeDensity { t, min, tol }) => {
                violations.push(format!("finite-difference density {min:.3e} below -{tol:.1e} at t = {t}"));
                (Vec::new(), 0, 0.0, min)
            }
            Err(e) => return Err(anyhow::Error::from(e).context(format!("scenario {}: finite differences", scn.name))),
        };
    for g in &gaps {
        let worst = g.q_l1_diff.max(g.a_diff).max(g.b_diff);
        if worst > tol.fd_gap * scale {
            violations.push(format!("spectral/FD gap {worst:.3e} at t = {} exceeds {:.1e}·M", g.t, tol.fd_gap));
        }
    }
    if fd_step_drift > tol.mass_drift * scale {
        violations.push(format!("FD per-step mass drift {fd_step_drift:.3e} exceeds {:.1e}·M", tol.mass_drift));
    }

    let mut weak_form = Vec::new();
    for test in weak_form_library() {
        let residual = verify_weak_form(ev, &test)?;
        if residual > tol.weak_form * scale {
            violations.push(format!(
                "weak-form residual {residual:.3e} for {} on ({}, {}) exceeds {:.1e}·M",
                test.chi.name(),
                test.t0,
                test.t1,
                tol.weak_form
            ));
        }
        weak_form.push(WeakFormResidual {
            t0: test.t0,
            t1: test.t1,
            chi: test.chi.name().to_string(),
            residual,
        });
    }

    let report = VerifyReport {
        scenario: scn.name.clone(),
        cells: scn.fd.cells,
        dt,
        fd_steps,
        gaps,
        fd_step_drift,
        fd_min_density,
        spectral_mass_drift,
        spectral_psi_mass_drift,
        weak_form,
        passed: violations.is_empty(),
        violations,
    };
    write_json(&scn.output_dir.join(VERIFY_JSON), &report)?;
    Ok(report)
}

pub fn bessel(scn: &Scenario, basis: &SpectralBasis) -> Result<BesselReport> {
    prepare(&scn.output_dir)?;
    let entries = BESSEL_MODES
        .iter()
        .filter(|&&j| j < basis.n_modes())
        .map(|&j| {
            bessel_comparison(&scn.model, basis, j).map(|c| BesselEntry {
                mode: c.mode,
                sup_error: c.sup_error,
                amplitude: c.amplitude,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let decreasing = entries.windows(2).all(|w| w[1].sup_error < w[0].sup_error);
    let report = BesselReport { entries, decreasing };
    write_json(&scn.output_dir.join(BESSEL_JSON), &report)?;
    Ok(report)
}

/// Which stages a scenario run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Spectrum { eigenfunctions: bool },
    Fixation,
    Evolve,
    Verify,
    Bessel,
    /// Spectrum, fixation, evolution, plots, and verification when the
    /// scenario asks for it.
    All,
}

pub fn run_stage(scn: &Scenario, stage: Stage) -> Result<Vec<String>> {
    let mut violations = Vec::new();
    match stage {
        Stage::Fixation => fixation(scn)?,
        Stage::Spectrum { eigenfunctions } => {
            violations = spectrum(scn, &build_basis(scn)?, eigenfunctions)?.violations;
        }
        Stage::Bessel => {
            let report = bessel(scn, &build_basis(scn)?)?;
            if !report.decreasing {
                violations.push("Bessel comparison error does not decrease with the mode index".into());
            }
        }
        Stage::Evolve => {
            let ev = build_evolution(scn, build_basis(scn)?)?;
            violations = evolve(scn, &ev)?.violations;
        }
        Stage::Verify => {
            let ev = build_evolution(scn, build_basis(scn)?)?;
            violations = verify(scn, &ev)?.violations;
        }
        Stage::All => {
            let basis = build_basis(scn)?;
            violations.extend(spectrum(scn, &basis, false)?.violations);
            fixation(scn)?;
            let ev = build_evolution(scn, basis)?;
            violations.extend(evolve(scn, &ev)?.violations);
            plot::emit_plot_data(&scn.output_dir)?;
            if scn.verify {
                violations.extend(verify(scn, &ev)?.violations);
            }
        }
    }
    Ok(violations.into_iter().map(|v| format!("{}: {v}", scn.name)).collect())
}

/// Runs every scenario on its own thread. Results keep the input order.
pub fn run_scenarios(scenarios: &[Scenario], stage: Stage) -> Vec<Result<Vec<String>>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|scn| scope.spawn(move || run_stage(scn, stage)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow::anyhow!("scenario thread panicked"))))
            .collect()
    })
}
