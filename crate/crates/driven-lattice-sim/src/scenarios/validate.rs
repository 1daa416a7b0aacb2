//! Validation checks behind `sim validate` and the acceptance suite.
//!
//! Every threshold is a named constant here; check functions return
//! [`CheckResult`]s that the CLI prints and the acceptance tests assert.

use rayon::prelude::*;

use crate::bandmodel::{BandMatrix, BandModel, DimerChain};
use crate::bases::{BasisKind, BasisTracker};
use crate::dynamics::{
    effective_coefficient_step, master_step, tdse_step, KGrid, MasterState, SbePropagator,
    StateVector, StencilOrder,
};
use crate::fields::{StaticRamp, Waveform};
use crate::observables::{bz_average, pearson_correlation, ObservableSeries, StateRef};
use crate::scenarios::config::{FieldConfig, ScenarioConfig};
use crate::scenarios::presets;
use crate::scenarios::runner::{run_scenario, CheckResult, RunReport, ScenarioError};
use crate::spectral::dipole_elements;
use crate::units;

/// Relative drift allowed in the Houston plateau over the final 20 fs of the
/// static-ramp scenario.
pub const STATIC_HOUSTON_DRIFT_REL: f64 = 1e-3;
/// Polarized-Houston plateau must sit below this fraction of the Houston one.
pub const STATIC_PH_SUPPRESSION: f64 = 0.01;
/// Agreement with the first-order static perturbation-theory level.
pub const STATIC_PT_ORACLE_REL: f64 = 0.05;
/// Minimum Pearson correlation of n_H with E² and n_B with A² (weak pulse).
pub const OFFRES_CORR_MIN: f64 = 0.99;
/// Post-pulse polarized-Houston residual vs the Houston peak (weak pulse).
pub const OFFRES_PH_RESIDUAL: f64 = 1e-2;
/// Post-pulse agreement of the three bases (strong pulse).
pub const STRONG_RESIDUAL_AGREE_REL: f64 = 0.05;
/// Fraction of the polarized-Houston rise that must fall inside field-crest
/// windows (strong pulse), and the crest window definition.
pub const STRONG_CREST_FRACTION: f64 = 0.6;
pub const STRONG_CREST_LEVEL: f64 = 0.75;
/// Agreement of the three bases at every output time after the settle window
/// (resonant pulse).
pub const RESONANT_AGREE_REL: f64 = 0.10;
pub const RESONANT_SETTLE_FS: f64 = 20.0;
/// DC-current hierarchy (master equation, static ramp).
pub const CURRENT_PH_SUPPRESSION: f64 = 0.05;
pub const CURRENT_TDSE_MATCH_RMS: f64 = 0.05;
/// Velocity- vs length-gauge population agreement.
pub const GAUGE_TOL: f64 = 1e-8;
/// Master-equation vs SBE density-matrix agreement at 40 fs, and the factor
/// by which the mismatch must shrink when the grid doubles.
pub const SBE_TOL: f64 = 1e-3;
pub const SBE_CONVERGENCE_FACTOR: f64 = 4.0;
/// Drift suppression when (E_dc, T_dc) → (E_dc/2, 2·T_dc).
pub const ADIABATIC_FACTOR: f64 = 3.0;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

fn rms(xs: &[f64]) -> f64 {
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len().max(1) as f64).sqrt()
}

/// Least-squares slope of y against x.
fn linear_trend(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&a, &b) in x.iter().zip(y.iter()) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let _ = n;
    sxy / sxx.max(f64::MIN_POSITIVE)
}

fn window<'a>(series: &'a ObservableSeries, channel: &str, t0_fs: f64, t1_fs: f64) -> Vec<f64> {
    let values = series.channel(channel).unwrap_or(&[]);
    series
        .times_fs
        .iter()
        .zip(values.iter())
        .filter(|(&t, _)| t >= t0_fs && t <= t1_fs)
        .map(|(_, &v)| v)
        .collect()
}

/// BZ-averaged first-order perturbation level (E·d_cv/Δε)² for a static
/// field — the independent oracle for the Houston plateau.
pub fn static_perturbation_level(model: &dyn BandModel, grid: &KGrid, e_dc: f64) -> f64 {
    let per_k: Vec<f64> = grid
        .points()
        .map(|k| {
            let eig = crate::spectral::eigensystem(&model.hamiltonian_at(k)).unwrap();
            let d = dipole_elements(model, k).unwrap();
            let mut total = 0.0;
            for b in 1..eig.energies.len() {
                let amp = e_dc * d[(b, 0)].norm() / (eig.energies[b] - eig.energies[0]);
                total += amp * amp;
            }
            total
        })
        .collect();
    bz_average(&per_k, grid).unwrap()
}

/// Build the scenario config for a preset plus `--set` style overrides.
pub fn build_config(
    name: &str,
    file_text: Option<&str>,
    sets: &[String],
) -> Result<ScenarioConfig, ScenarioError> {
    let text = presets::preset_text(name).ok_or_else(|| ScenarioError::UnknownPreset(name.to_string()))?;
    let mut raw = crate::scenarios::config::RawConfig::parse(text, &format!("preset {name}"))?;
    if let Some(ft) = file_text {
        raw.merge(crate::scenarios::config::RawConfig::parse(ft, "config")?);
    }
    for s in sets {
        raw.set_override(s)?;
    }
    Ok(ScenarioConfig::materialize(name, &raw)?)
}

/// Figure-property checks evaluated on a finished series.
pub fn evaluate_figure_checks(cfg: &ScenarioConfig, series: &ObservableSeries) -> Vec<CheckResult> {
    match cfg.preset.as_str() {
        "fig1_static" => check_static_populations(cfg, series),
        "fig2_offres_weak" => check_offres_weak(series),
        "fig3_offres_strong" => check_offres_strong(series),
        "fig4_resonant" => check_resonant(cfg, series),
        "fig5_current" => check_current_hierarchy(cfg, series),
        _ => Vec::new(),
    }
}

fn check_static_populations(cfg: &ScenarioConfig, series: &ObservableSeries) -> Vec<CheckResult> {
    let t_dc_fs = match cfg.field {
        FieldConfig::StaticRamp { t_dc, .. } => units::au_to_fs(t_dc),
        _ => 20.0,
    };
    let t_end_fs = units::au_to_fs(cfg.t_end);
    let plateau_h = window(series, "n_H", t_end_fs - 20.0, t_end_fs);
    let plateau_ph = window(series, "n_PH", t_end_fs - 20.0, t_end_fs);
    let after_ramp_b = window(series, "n_B", t_dc_fs + 1e-9, t_end_fs);

    let mut checks = Vec::new();

    // Drift = trend of the plateau level across the window (least-squares
    // slope × window length). The ramp's seams excite a small zero-mean
    // ringing of n_H at the gap frequency; a trend measure separates the
    // question being asked — does the level stay constant, unlike n_B —
    // from that bounded oscillation.
    let h_mean = mean(&plateau_h);
    let h_times: Vec<f64> = series
        .times_fs
        .iter()
        .cloned()
        .filter(|&t| t >= t_end_fs - 20.0 && t <= t_end_fs)
        .collect();
    let h_drift = linear_trend(&h_times, &plateau_h) * 20.0 / h_mean;
    checks.push(CheckResult::new(
        "houston_plateau_drift",
        h_drift.abs() < STATIC_HOUSTON_DRIFT_REL,
        format!("relative trend {h_drift:.3e} over final 20 fs (limit {STATIC_HOUSTON_DRIFT_REL:.0e})"),
    ));

    let b_monotone = after_ramp_b.windows(2).all(|w| w[1] > w[0]);
    checks.push(CheckResult::new(
        "bloch_population_growing",
        b_monotone,
        format!("n_B strictly increasing over {} post-ramp samples", after_ramp_b.len()),
    ));

    let ph_mean = mean(&plateau_ph);
    checks.push(CheckResult::new(
        "polarized_suppression",
        ph_mean < STATIC_PH_SUPPRESSION * h_mean,
        format!("plateau n_PH/n_H = {:.3e} (limit {STATIC_PH_SUPPRESSION})", ph_mean / h_mean),
    ));

    let e_dc = match cfg.field {
        FieldConfig::StaticRamp { e_dc, .. } => e_dc,
        _ => 0.0,
    };
    let model = cfg.make_model();
    let grid = KGrid::new(cfg.n_k, model.lattice_constant()).unwrap();
    let oracle = static_perturbation_level(&model, &grid, e_dc);
    let rel = (h_mean - oracle).abs() / oracle;
    checks.push(CheckResult::new(
        "houston_matches_perturbation_theory",
        rel < STATIC_PT_ORACLE_REL,
        format!("plateau {h_mean:.6e} vs oracle {oracle:.6e}, rel dev {rel:.3e} (limit {STATIC_PT_ORACLE_REL})"),
    ));

    // Hierarchy n_B ≫ n_H: the spurious Bloch population dwarfs the virtual
    // Houston one once the wavevector shift has accumulated.
    let b_end = *series.channel("n_B").unwrap().last().unwrap();
    checks.push(CheckResult::new(
        "bloch_dominates_houston",
        b_end > 100.0 * h_mean,
        format!("final n_B/n_H plateau = {:.3e} (limit > 100)", b_end / h_mean),
    ));

    // Weak slowly-varying limit: the polarized-Houston projection of the
    // exact dynamics stays constant after the ramp to within 1e-6 of the
    // Houston virtual-population level.
    let ph_drift = plateau_ph.iter().cloned().fold(f64::MIN, f64::max)
        - plateau_ph.iter().cloned().fold(f64::MAX, f64::min);
    checks.push(CheckResult::new(
        "polarized_drift_bound",
        ph_drift < 1e-6 * h_mean,
        format!("n_PH drift {ph_drift:.3e} vs 1e-6 × n_H level {:.3e}", 1e-6 * h_mean),
    ));
    checks
}

fn check_offres_weak(series: &ObservableSeries) -> Vec<CheckResult> {
    let e: Vec<f64> = series.channel("E_au").unwrap().iter().map(|x| x * x).collect();
    let a: Vec<f64> = series.channel("A_au").unwrap().iter().map(|x| x * x).collect();
    let n_h = series.channel("n_H").unwrap();
    let n_b = series.channel("n_B").unwrap();
    let n_ph = series.channel("n_PH").unwrap();

    let mut checks = Vec::new();
    let corr_h = pearson_correlation(n_h, &e);
    checks.push(CheckResult::new(
        "houston_tracks_field_squared",
        corr_h > OFFRES_CORR_MIN,
        format!("corr(n_H, E²) = {corr_h:.5} (limit {OFFRES_CORR_MIN})"),
    ));
    let corr_b = pearson_correlation(n_b, &a);
    checks.push(CheckResult::new(
        "bloch_tracks_potential_squared",
        corr_b > OFFRES_CORR_MIN,
        format!("corr(n_B, A²) = {corr_b:.5} (limit {OFFRES_CORR_MIN})"),
    ));
    let peak_h = n_h.iter().cloned().fold(f64::MIN, f64::max);
    let residual = *n_ph.last().unwrap();
    checks.push(CheckResult::new(
        "polarized_residual_suppressed",
        residual < OFFRES_PH_RESIDUAL * peak_h,
        format!("post-pulse n_PH {residual:.3e} vs peak n_H {peak_h:.3e} (limit ratio {OFFRES_PH_RESIDUAL})"),
    ));
    checks
}

fn check_offres_strong(series: &ObservableSeries) -> Vec<CheckResult> {
    let n_b = series.channel("n_B").unwrap();
    let n_h = series.channel("n_H").unwrap();
    let n_ph = series.channel("n_PH").unwrap();
    let e_abs: Vec<f64> = series.channel("E_au").unwrap().iter().map(|x| x.abs()).collect();

    let mut checks = Vec::new();

    // After the pulse all bases reduce to Bloch projections, so residual
    // (real) excitation must be basis-independent.
    let finals = [*n_b.last().unwrap(), *n_h.last().unwrap(), *n_ph.last().unwrap()];
    let hi = finals.iter().cloned().fold(f64::MIN, f64::max);
    let lo = finals.iter().cloned().fold(f64::MAX, f64::min);
    let rel = (hi - lo) / hi;
    checks.push(CheckResult::new(
        "residuals_basis_independent",
        rel < STRONG_RESIDUAL_AGREE_REL,
        format!("post-pulse spread {rel:.3e} across bases (limit {STRONG_RESIDUAL_AGREE_REL})"),
    ));

    // Step-like injection: the n_PH rise concentrates in field-crest windows
    // (|E| above STRONG_CREST_LEVEL of its maximum) instead of tracking E².
    let e_max = e_abs.iter().cloned().fold(f64::MIN, f64::max);
    let mut rise_total = 0.0;
    let mut rise_crest = 0.0;
    let mut crest_samples = 0usize;
    for i in 1..n_ph.len() {
        let jump = (n_ph[i] - n_ph[i - 1]).max(0.0);
        rise_total += jump;
        let near_crest = e_abs[i].max(e_abs[i - 1]) >= STRONG_CREST_LEVEL * e_max;
        if near_crest {
            rise_crest += jump;
            crest_samples += 1;
        }
    }
    let concentration = rise_crest / rise_total.max(f64::MIN_POSITIVE);
    let crest_time_fraction = crest_samples as f64 / (n_ph.len() - 1) as f64;
    checks.push(CheckResult::new(
        "polarized_rise_step_like",
        concentration >= STRONG_CREST_FRACTION && crest_time_fraction < 0.5,
        format!(
            "{:.0}% of the n_PH rise inside crest windows covering {:.0}% of the pulse \
             (limits ≥{:.0}%, <50%)",
            100.0 * concentration,
            100.0 * crest_time_fraction,
            100.0 * STRONG_CREST_FRACTION
        ),
    ));

    // And the polarized projection must not simply follow E² like the
    // Houston one does.
    let e2: Vec<f64> = e_abs.iter().map(|x| x * x).collect();
    let corr_ph = pearson_correlation(n_ph, &e2);
    let corr_h = pearson_correlation(n_h, &e2);
    checks.push(CheckResult::new(
        "polarized_decorrelated_from_field_squared",
        corr_ph < corr_h,
        format!("corr(n_PH, E²) = {corr_ph:.3} < corr(n_H, E²) = {corr_h:.3}"),
    ));
    checks
}

fn moving_average(values: &[f64], half_width: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half_width);
            let hi = (i + half_width + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn check_resonant(cfg: &ScenarioConfig, series: &ObservableSeries) -> Vec<CheckResult> {
    // The three populations carry small virtual components that beat against
    // the carrier; the curve-level comparison averages over one carrier
    // period so it measures the population dynamics, not the beat phase.
    let omega0 = match cfg.field {
        FieldConfig::Pulse { omega_0, .. } => omega_0,
        _ => units::ev_to_hartree(1.55),
    };
    let stride_fs = if series.times_fs.len() > 1 {
        series.times_fs[1] - series.times_fs[0]
    } else {
        1.0
    };
    let carrier_fs = units::au_to_fs(2.0 * std::f64::consts::PI / omega0);
    let half_width = ((0.5 * carrier_fs / stride_fs).ceil() as usize).max(1);

    let n_b = moving_average(series.channel("n_B").unwrap(), half_width);
    let n_h = moving_average(series.channel("n_H").unwrap(), half_width);
    let n_ph = moving_average(series.channel("n_PH").unwrap(), half_width);
    let mut worst: f64 = 0.0;
    let mut worst_t = 0.0;
    for (i, &t) in series.times_fs.iter().enumerate() {
        if t <= RESONANT_SETTLE_FS {
            continue;
        }
        let trio = [n_b[i], n_h[i], n_ph[i]];
        let hi = trio.iter().cloned().fold(f64::MIN, f64::max);
        let lo = trio.iter().cloned().fold(f64::MAX, f64::min);
        let rel = (hi - lo) / hi;
        if rel > worst {
            worst = rel;
            worst_t = t;
        }
    }
    let mut checks = vec![CheckResult::new(
        "bases_agree_at_resonance",
        worst <= RESONANT_AGREE_REL,
        format!(
            "worst carrier-averaged spread {worst:.3} at t = {worst_t:.1} fs (limit {RESONANT_AGREE_REL})"
        ),
    )];

    let finals = [
        *series.channel("n_B").unwrap().last().unwrap(),
        *series.channel("n_H").unwrap().last().unwrap(),
        *series.channel("n_PH").unwrap().last().unwrap(),
    ];
    let hi = finals.iter().cloned().fold(f64::MIN, f64::max);
    let lo = finals.iter().cloned().fold(f64::MAX, f64::min);
    let rel = (hi - lo) / hi;
    checks.push(CheckResult::new(
        "bases_agree_at_final_time",
        rel <= RESONANT_AGREE_REL,
        format!("final-time spread {rel:.3e} (limit {RESONANT_AGREE_REL})"),
    ));
    checks
}

fn check_current_hierarchy(cfg: &ScenarioConfig, series: &ObservableSeries) -> Vec<CheckResult> {
    let t_end_fs = units::au_to_fs(cfg.t_end);
    let t_dc_fs = match cfg.field {
        FieldConfig::StaticRamp { t_dc, .. } => units::au_to_fs(t_dc),
        _ => 20.0,
    };
    let j_h = window(series, "J_houston_au", t_end_fs - 10.0, t_end_fs);
    let j_p = window(series, "J_polarized_au", t_end_fs - 10.0, t_end_fs);

    let mut checks = Vec::new();
    let h_mean = mean(&j_h).abs();
    let p_mean = mean(&j_p).abs();
    checks.push(CheckResult::new(
        "polarized_current_suppressed",
        p_mean < CURRENT_PH_SUPPRESSION * h_mean,
        format!("|J_pol| = {p_mean:.3e} vs |J_hou| = {h_mean:.3e} over final 10 fs (limit ratio {CURRENT_PH_SUPPRESSION})"),
    ));

    // The Houston current settles to a spurious nonzero plateau.
    let h_std = {
        let m = mean(&j_h);
        (j_h.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / j_h.len() as f64).sqrt()
    };
    checks.push(CheckResult::new(
        "houston_current_plateau",
        h_mean > 5.0 * h_std && h_mean > 0.0,
        format!("|mean| {h_mean:.3e} vs std {h_std:.3e} over final 10 fs"),
    ));

    // The Bloch-referenced current runs away. Right after the ramp all four
    // engines share a decaying polarization transient plus gap-frequency
    // ringing, so the runaway is asserted on the ringing-averaged curve after
    // a 5 fs settle, together with end-to-end growth across the window.
    let jb_raw: Vec<f64> = series.channel("J_bloch_au").unwrap().iter().map(|x| x.abs()).collect();
    let stride_fs = if series.times_fs.len() > 1 {
        series.times_fs[1] - series.times_fs[0]
    } else {
        1.0
    };
    let gap_period_fs = units::au_to_fs(2.0 * std::f64::consts::PI / cfg.model.delta);
    let half_width = ((gap_period_fs / stride_fs).ceil() as usize).max(1);
    let jb_smooth = moving_average(&jb_raw, half_width);
    let post: Vec<(f64, f64)> = series
        .times_fs
        .iter()
        .cloned()
        .zip(jb_smooth.iter().cloned())
        .filter(|(t, _)| *t >= t_dc_fs + 5.0)
        .collect();
    let b_grows = post.windows(2).all(|w| w[1].1 > w[0].1);
    let at_ramp_end = jb_raw
        .iter()
        .zip(series.times_fs.iter())
        .find(|(_, &t)| t >= t_dc_fs)
        .map(|(v, _)| *v)
        .unwrap_or(0.0);
    let grew_overall = jb_raw.last().copied().unwrap_or(0.0) > at_ramp_end;
    checks.push(CheckResult::new(
        "bloch_current_runaway",
        b_grows && grew_overall,
        format!(
            "ringing-averaged |J_bloch| strictly increasing over {} samples and {:.2}× end-to-end",
            post.len(),
            jb_raw.last().copied().unwrap_or(0.0) / at_ramp_end.max(f64::MIN_POSITIVE)
        ),
    ));

    let j_pol_full = series.channel("J_polarized_au").unwrap();
    let j_tdse_full = series.channel("J_tdse_au").unwrap();
    let diff: Vec<f64> = j_pol_full.iter().zip(j_tdse_full.iter()).map(|(a, b)| a - b).collect();
    let rel = rms(&diff) / rms(j_tdse_full).max(f64::MIN_POSITIVE);
    checks.push(CheckResult::new(
        "polarized_matches_tdse_current",
        rel < CURRENT_TDSE_MATCH_RMS,
        format!("RMS(J_pol − J_tdse)/RMS(J_tdse) = {rel:.3e} (limit {CURRENT_TDSE_MATCH_RMS})"),
    ));
    checks
}

/// Velocity- vs length-gauge equivalence: propagate the Schrödinger equation
/// in the velocity gauge and the coefficient equation i·ċ = H_eff·c in the
/// length gauge with matched exponential-midpoint integrators, then compare
/// Houston-basis conduction populations per k and time.
pub fn gauge_equivalence_run(cfg: &ScenarioConfig) -> Result<(ObservableSeries, Vec<CheckResult>), ScenarioError> {
    let model = cfg.make_model();
    let waveform = cfg.make_waveform();
    let grid = KGrid::new(cfg.n_k, model.lattice_constant())?;
    let sched = crate::scenarios::runner::Schedule::from_config(cfg);

    struct GaugeRow {
        n_tdse: Vec<f64>,
        n_coeff: Vec<f64>,
    }

    let per_k: Vec<GaugeRow> = grid
        .points()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| -> Result<GaugeRow, ScenarioError> {
            let bloch = crate::bases::bloch_snapshot(&model, k)?;
            let n_bands = bloch.n_bands();
            let mut psi = StateVector::from_band(&bloch, 0);
            let mut c = StateVector(vec![num_complex::Complex64::new(0.0, 0.0); n_bands]);
            c.0[0] = num_complex::Complex64::new(1.0, 0.0);
            let mut adiabatic = BasisTracker::new(BasisKind::Houston, &model, waveform.as_ref(), k, 0.0)?;

            let mut n_tdse = Vec::new();
            let mut n_coeff = Vec::new();
            let mut next_out = 0usize;
            for step in 0..=sched.n_steps {
                let t = step as f64 * sched.dt;
                if next_out < sched.output_steps.len() && sched.output_steps[next_out] == step {
                    next_out += 1;
                    let snap = adiabatic.snapshot();
                    let mut a = 0.0;
                    let mut b = 0.0;
                    for band in 1..n_bands {
                        a += crate::observables::project_population(
                            StateRef::Pure(&psi),
                            snap,
                            band,
                            t,
                            0.51 * sched.dt,
                        )?;
                        b += c.0[band].norm_sqr();
                    }
                    n_tdse.push(a);
                    n_coeff.push(b);
                }
                if step < sched.n_steps {
                    adiabatic.step(&model, waveform.as_ref(), 0.5 * sched.dt)?;
                    let mid = adiabatic.snapshot().clone();
                    c = effective_coefficient_step(
                        &c,
                        &mid,
                        &model,
                        waveform.e_at(t + 0.5 * sched.dt),
                        sched.dt,
                    )?;
                    adiabatic.step(&model, waveform.as_ref(), 0.5 * sched.dt)?;
                    psi = tdse_step(&psi, k, t, sched.dt, &model, waveform.as_ref())?;
                }
            }
            Ok(GaugeRow { n_tdse, n_coeff })
        })
        .collect::<Result<_, _>>()?;

    let mut series = ObservableSeries::new(&["A_au", "E_au", "n_H_tdse", "n_H_coeff", "abs_dev"]);
    let mut max_dev: f64 = 0.0;
    for (i, &step) in sched.output_steps.iter().enumerate() {
        let t = step as f64 * sched.dt;
        let a_vals: Vec<f64> = per_k.iter().map(|p| p.n_tdse[i]).collect();
        let b_vals: Vec<f64> = per_k.iter().map(|p| p.n_coeff[i]).collect();
        let dev = a_vals
            .iter()
            .zip(b_vals.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        max_dev = max_dev.max(dev);
        series.push_row(
            units::au_to_fs(t),
            &[
                waveform.a_at(t),
                waveform.e_at(t),
                bz_average(&a_vals, &grid)?,
                bz_average(&b_vals, &grid)?,
                dev,
            ],
        );
    }

    let checks = vec![CheckResult::new(
        "gauge_equivalence",
        max_dev < GAUGE_TOL,
        format!("max |n_H(velocity) − n_H(length)| = {max_dev:.3e} over {} k-points (limit {GAUGE_TOL:.0e})",
            cfg.n_k),
    )];
    Ok((series, checks))
}

/// Master-equation (Houston reference) vs SBE comparison at a fixed time.
///
/// The ramp strength is re-derived so the advected solution sits exactly on
/// grid points at the comparison time: E_dc = m·Δk/(t* − T_dc/2) with m
/// chosen to land near 0.1 MV/cm. Both propagators then describe the same
/// physics on the same labels and their density matrices compare entrywise.
fn sbe_comparison_at(
    model: &DimerChain,
    n_k: usize,
    dt: f64,
    t_dc: f64,
    e_dc: f64,
    t_star_steps: usize,
    relax: &crate::dynamics::RelaxationParams,
    series_out: Option<&mut ObservableSeries>,
) -> Result<f64, ScenarioError> {
    let grid = KGrid::new(n_k, model.lattice_constant())?;
    let waveform = StaticRamp { e_dc, t_dc };
    let sbe = SbePropagator::new(model, grid, StencilOrder::Fourth)?;

    // Master equation sweep, keeping the final density matrices.
    let finals: Vec<BandMatrix> = grid
        .points()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| -> Result<BandMatrix, ScenarioError> {
            let mut st = MasterState::ground_state(BasisKind::Houston, model, &waveform, k, 0.0)?;
            for step in 0..t_star_steps {
                master_step(&mut st, k, step as f64 * dt, dt, model, &waveform, relax)?;
            }
            Ok(st.rho)
        })
        .collect::<Result<_, _>>()?;

    // SBE propagation over the same schedule, sampling BZ-averaged channels.
    let mut rho = sbe.ground_state(model.n_bands());
    let mut local_series = ObservableSeries::new(&["A_au", "E_au", "n_H_sbe"]);
    let sample_every = ((units::fs_to_au(2.0) / dt).round() as usize).max(1);
    for step in 0..t_star_steps {
        let t = step as f64 * dt;
        if step % sample_every == 0 {
            let n_c = rho.iter().map(|r| r[(1, 1)].re).sum::<f64>() / sbe.n_ext() as f64;
            local_series.push_row(units::au_to_fs(t), &[waveform.a_at(t), waveform.e_at(t), n_c]);
        }
        sbe.step(&mut rho, t, dt, &waveform, relax)?;
    }
    if let Some(out) = series_out {
        *out = local_series;
    }

    // Compare at t*: master k_i ↔ SBE label k_i + A(t*), exactly s grid
    // points away by construction.
    let t_star = t_star_steps as f64 * dt;
    let a_star = waveform.a_at(t_star);
    let s = (a_star / grid.spacing()).round() as i64;
    let misalign = (a_star / grid.spacing() - s as f64).abs();
    debug_assert!(misalign < 1e-6, "field not grid-aligned: {misalign}");

    let mut max_diff: f64 = 0.0;
    let n_ext = sbe.n_ext() as i64;
    for (i, rho_master) in finals.iter().enumerate() {
        let j = (i as i64 + s).rem_euclid(n_ext) as usize;
        let u = sbe.state_at(j);
        let projected = u.dagger().matmul(rho_master).matmul(u);
        for a in 0..model.n_bands() {
            for b in 0..model.n_bands() {
                max_diff = max_diff.max((projected[(a, b)] - rho[j][(a, b)]).norm());
            }
        }
    }
    Ok(max_diff)
}

/// Run the SBE equivalence check: agreement at the base grid and ≥4×
/// improvement when the grid doubles.
pub fn sbe_equivalence_run(cfg: &ScenarioConfig) -> Result<(ObservableSeries, Vec<CheckResult>), ScenarioError> {
    let model = cfg.make_model();
    let t_dc = match cfg.field {
        FieldConfig::StaticRamp { t_dc, .. } => t_dc,
        _ => units::fs_to_au(20.0),
    };
    let dt = cfg.dt;
    let t_star_steps = (cfg.t_end / dt).round() as usize;
    let t_star = t_star_steps as f64 * dt;

    // Grid-aligned ramp strength near 0.1 MV/cm (see doc comment above).
    let grid = KGrid::new(cfg.n_k, model.lattice_constant())?;
    let m = ((units::mv_per_cm_to_au(0.1) * (t_star - 0.5 * t_dc)) / grid.spacing()).round();
    let e_dc = m * grid.spacing() / (t_star - 0.5 * t_dc);

    let mut series = ObservableSeries::default();
    let diff_base = sbe_comparison_at(
        &model,
        cfg.n_k,
        dt,
        t_dc,
        e_dc,
        t_star_steps,
        &cfg.relaxation,
        Some(&mut series),
    )?;
    let diff_fine = sbe_comparison_at(
        &model,
        cfg.n_k * 2,
        dt,
        t_dc,
        e_dc,
        t_star_steps,
        &cfg.relaxation,
        None,
    )?;

    let checks = vec![
        CheckResult::new(
            "sbe_agreement",
            diff_base < SBE_TOL,
            format!(
                "max-abs density-matrix difference {diff_base:.3e} at t = {:.1} fs, N_k = {} (limit {SBE_TOL:.0e})",
                units::au_to_fs(t_star),
                cfg.n_k
            ),
        ),
        CheckResult::new(
            "sbe_convergence",
            diff_fine > 0.0 && diff_base / diff_fine >= SBE_CONVERGENCE_FACTOR,
            format!(
                "mismatch shrinks {:.1}× when N_k doubles to {} (limit ≥{SBE_CONVERGENCE_FACTOR}×)",
                diff_base / diff_fine,
                cfg.n_k * 2
            ),
        ),
    ];
    Ok((series, checks))
}

/// Post-ramp drift of the BZ-averaged polarized-Houston conduction
/// population, measured over a 20 fs window starting 5 fs after the ramp.
fn polarized_drift(
    model: &DimerChain,
    n_k: usize,
    dt: f64,
    e_dc: f64,
    t_dc: f64,
) -> Result<f64, ScenarioError> {
    let grid = KGrid::new(n_k, model.lattice_constant())?;
    let waveform = StaticRamp { e_dc, t_dc };
    let window_start = t_dc + units::fs_to_au(5.0);
    let window_end = t_dc + units::fs_to_au(25.0);
    let n_steps = (window_end / dt).ceil() as usize;
    let sample_every = ((units::fs_to_au(0.5) / dt).round() as usize).max(1);

    let per_k: Vec<Vec<f64>> = grid
        .points()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>, ScenarioError> {
            let bloch = crate::bases::bloch_snapshot(model, k)?;
            let mut psi = StateVector::from_band(&bloch, 0);
            let mut tracker = BasisTracker::new(BasisKind::PolarizedHouston, model, &waveform, k, 0.0)?;
            let mut samples = Vec::new();
            for step in 0..=n_steps {
                let t = step as f64 * dt;
                if t >= window_start && step % sample_every == 0 {
                    let mut n = 0.0;
                    for band in 1..bloch.n_bands() {
                        n += crate::observables::project_population(
                            StateRef::Pure(&psi),
                            tracker.snapshot(),
                            band,
                            t,
                            0.51 * dt,
                        )?;
                    }
                    samples.push(n);
                }
                if step < n_steps {
                    psi = tdse_step(&psi, k, t, dt, model, &waveform)?;
                    tracker.step(model, &waveform, dt)?;
                }
            }
            Ok(samples)
        })
        .collect::<Result<_, _>>()?;

    let n_samples = per_k[0].len();
    let averaged: Vec<f64> = (0..n_samples)
        .map(|i| per_k.iter().map(|s| s[i]).sum::<f64>() / n_k as f64)
        .collect();
    let hi = averaged.iter().cloned().fold(f64::MIN, f64::max);
    let lo = averaged.iter().cloned().fold(f64::MAX, f64::min);
    Ok(hi - lo)
}

/// Weak slowly-varying limit: halving E_dc while doubling T_dc must cut the
/// post-ramp polarized-Houston drift by at least [`ADIABATIC_FACTOR`].
pub fn adiabatic_scaling_run(cfg: &ScenarioConfig) -> Result<(ObservableSeries, Vec<CheckResult>), ScenarioError> {
    let model = cfg.make_model();
    let (e_dc, t_dc) = match cfg.field {
        FieldConfig::StaticRamp { e_dc, t_dc } => (e_dc, t_dc),
        _ => (units::mv_per_cm_to_au(0.1), units::fs_to_au(20.0)),
    };
    let drift_base = polarized_drift(&model, cfg.n_k, cfg.dt, e_dc, t_dc)?;
    let drift_gentle = polarized_drift(&model, cfg.n_k, cfg.dt, 0.5 * e_dc, 2.0 * t_dc)?;
    let ratio = drift_base / drift_gentle.max(f64::MIN_POSITIVE);

    // The series from the base run is informative output for `sim run`.
    let (series, _report) = run_scenario(cfg)?;
    let checks = vec![CheckResult::new(
        "adiabatic_drift_scaling",
        ratio >= ADIABATIC_FACTOR,
        format!(
            "post-ramp n_PH drift {drift_base:.3e} → {drift_gentle:.3e} under (E/2, 2T): {ratio:.2}× (limit ≥{ADIABATIC_FACTOR}×)"
        ),
    )];
    Ok((series, checks))
}

/// Run a preset and evaluate its associated checks.
pub fn validate_preset(name: &str, sets: &[String]) -> Result<(ObservableSeries, RunReport), ScenarioError> {
    let mut all_sets: Vec<String> =
        presets::validation_overrides(name).iter().map(|s| s.to_string()).collect();
    all_sets.extend_from_slice(sets);
    let cfg = build_config(name, None, &all_sets)?;

    match name {
        "validate_gauge" => {
            let started = std::time::Instant::now();
            let (series, checks) = gauge_equivalence_run(&cfg)?;
            let report = checked_report(&cfg, checks, started.elapsed().as_secs_f64());
            Ok((series, report))
        }
        "validate_sbe" => {
            let started = std::time::Instant::now();
            let (series, checks) = sbe_equivalence_run(&cfg)?;
            let report = checked_report(&cfg, checks, started.elapsed().as_secs_f64());
            Ok((series, report))
        }
        "validate_adiabatic" => {
            let started = std::time::Instant::now();
            let (series, checks) = adiabatic_scaling_run(&cfg)?;
            let report = checked_report(&cfg, checks, started.elapsed().as_secs_f64());
            Ok((series, report))
        }
        _ => {
            let (series, mut report) = run_scenario(&cfg)?;
            report.checks = evaluate_figure_checks(&cfg, &series);
            Ok((series, report))
        }
    }
}

fn checked_report(cfg: &ScenarioConfig, checks: Vec<CheckResult>, wall: f64) -> RunReport {
    RunReport {
        preset: cfg.preset.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds: wall,
        threads: rayon::current_num_threads(),
        config_echo: cfg.echo.clone(),
        invariants: Default::default(),
        checks,
        notes: Vec::new(),
        output_digest: None,
    }
}

/// Convenience used by `sim run` for every preset, including the validation
/// presets (which produce their comparison series without asserting).
pub fn run_preset(name: &str, file_text: Option<&str>, sets: &[String]) -> Result<(ObservableSeries, RunReport, ScenarioConfig), ScenarioError> {
    let cfg = build_config(name, file_text, sets)?;
    match name {
        "validate_gauge" => {
            let started = std::time::Instant::now();
            let (series, checks) = gauge_equivalence_run(&cfg)?;
            let report = checked_report(&cfg, checks, started.elapsed().as_secs_f64());
            Ok((series, report, cfg))
        }
        "validate_sbe" => {
            let started = std::time::Instant::now();
            let (series, checks) = sbe_equivalence_run(&cfg)?;
            let report = checked_report(&cfg, checks, started.elapsed().as_secs_f64());
            Ok((series, report, cfg))
        }
        "validate_adiabatic" => {
            let started = std::time::Instant::now();
            let (series, checks) = adiabatic_scaling_run(&cfg)?;
            let report = checked_report(&cfg, checks, started.elapsed().as_secs_f64());
            Ok((series, report, cfg))
        }
        _ => {
            let (series, report) = run_scenario(&cfg)?;
            Ok((series, report, cfg))
        }
    }
}
