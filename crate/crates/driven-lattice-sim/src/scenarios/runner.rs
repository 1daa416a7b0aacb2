//! Run orchestration: sweep the k-grid with the configured engine, collect
//! BZ-averaged channels at the output stride, and assemble the run report.
//!
//! Per-k work (Schrödinger and master engines) is embarrassingly parallel;
//! each k-point's state and basis trackers live on exactly one worker. The
//! final reduction over k always runs in grid order, so a run's numbers are
//! bit-identical no matter how many threads executed it. The SBE engine
//! advances its whole grid as one synchronized step.

use rayon::prelude::*;

use crate::bandmodel::{BandMatrix, BandModel};
use crate::bases::{BasisKind, BasisTracker};
use crate::dynamics::{
    master_step, tdse_step, DynamicsError, KGrid, MasterState, SbePropagator, StateVector,
    StencilOrder,
};
use crate::fields::Waveform;
use crate::observables::{current, project_population, ObservableSeries, StateRef};
use crate::scenarios::config::{EngineKind, ScenarioConfig};
use crate::spectral::eigensystem;
use crate::units;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] crate::scenarios::config::ConfigError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Observable(#[from] crate::observables::ObservableError),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("i/o error on `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
}

/// One validation check and its outcome.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckResult { name: name.to_string(), passed, detail }
    }
}

/// Numerical health counters accumulated while a run propagates.
#[derive(Clone, Copy, Debug, Default)]
pub struct InvariantLog {
    pub max_nonhermiticity: f64,
    pub max_trace_drift: f64,
    pub min_rho_eigenvalue: f64,
    pub max_norm_drift: f64,
}

impl InvariantLog {
    fn fresh() -> Self {
        InvariantLog {
            max_nonhermiticity: 0.0,
            max_trace_drift: 0.0,
            min_rho_eigenvalue: f64::INFINITY,
            max_norm_drift: 0.0,
        }
    }

    fn absorb(&mut self, other: &InvariantLog) {
        self.max_nonhermiticity = self.max_nonhermiticity.max(other.max_nonhermiticity);
        self.max_trace_drift = self.max_trace_drift.max(other.max_trace_drift);
        self.min_rho_eigenvalue = self.min_rho_eigenvalue.min(other.min_rho_eigenvalue);
        self.max_norm_drift = self.max_norm_drift.max(other.max_norm_drift);
    }

    fn observe_rho(&mut self, rho: &BandMatrix) {
        self.max_nonhermiticity = self.max_nonhermiticity.max(rho.max_nonhermiticity());
        self.max_trace_drift = self.max_trace_drift.max((rho.trace().re - 1.0).abs());
        if let Ok(eig) = eigensystem(rho) {
            for &e in &eig.energies {
                self.min_rho_eigenvalue = self.min_rho_eigenvalue.min(e);
            }
        }
    }
}

/// Plain-text sidecar emitted next to every CSV.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub preset: String,
    pub version: String,
    pub wall_seconds: f64,
    pub threads: usize,
    pub config_echo: Vec<(String, String)>,
    pub invariants: InvariantLog,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
    pub output_digest: Option<String>,
}

impl RunReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {} v{} run report\n", env!("CARGO_PKG_NAME"), self.version));
        out.push_str(&format!("preset: {}\n", self.preset));
        out.push_str(&format!("wall_seconds: {:.3}\n", self.wall_seconds));
        out.push_str(&format!("threads: {}\n", self.threads));
        out.push_str("config:\n");
        for (k, v) in &self.config_echo {
            out.push_str(&format!("  {k} = {v}\n"));
        }
        out.push_str("invariants:\n");
        out.push_str(&format!("  max_nonhermiticity: {:.3e}\n", self.invariants.max_nonhermiticity));
        out.push_str(&format!("  max_trace_drift: {:.3e}\n", self.invariants.max_trace_drift));
        let min_eig = self.invariants.min_rho_eigenvalue;
        if min_eig.is_finite() {
            out.push_str(&format!("  min_rho_eigenvalue: {:.3e}\n", min_eig));
        }
        out.push_str(&format!("  max_norm_drift: {:.3e}\n", self.invariants.max_norm_drift));
        if !self.checks.is_empty() {
            out.push_str("checks:\n");
            for c in &self.checks {
                out.push_str(&format!(
                    "  [{}] {}: {}\n",
                    if c.passed { "pass" } else { "FAIL" },
                    c.name,
                    c.detail
                ));
            }
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        if let Some(d) = &self.output_digest {
            out.push_str(&format!("output_sha256: {d}\n"));
        }
        out
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Output schedule shared by every engine: step indices at which channels are
/// sampled, always including step 0.
pub struct Schedule {
    pub n_steps: usize,
    pub dt: f64,
    pub output_steps: Vec<usize>,
}

impl Schedule {
    pub fn from_config(cfg: &ScenarioConfig) -> Schedule {
        let n_steps = (cfg.t_end / cfg.dt).round().max(1.0) as usize;
        let stride_steps = (cfg.stride / cfg.dt).round().max(1.0) as usize;
        let output_steps: Vec<usize> = (0..=n_steps).filter(|s| s % stride_steps == 0).collect();
        Schedule { n_steps, dt: cfg.dt, output_steps }
    }

    pub fn times_fs(&self) -> Vec<f64> {
        self.output_steps.iter().map(|&s| units::au_to_fs(s as f64 * self.dt)).collect()
    }
}

/// Conduction-manifold occupation: total projected population above the
/// occupied band (band 0 is the filled valence band throughout).
fn conduction_population(
    state: StateRef<'_>,
    tracker: &BasisTracker,
    t: f64,
    dt: f64,
) -> Result<f64, crate::observables::ObservableError> {
    let snap = tracker.snapshot();
    let mut total = 0.0;
    for b in 1..snap.n_bands() {
        total += project_population(state, snap, b, t, 0.51 * dt)?;
    }
    debug_assert!(total >= -1e-12 && total <= snap.n_bands() as f64 + 1e-9);
    Ok(total)
}

/// Per-k time series produced by one worker: `rows[output][channel]`.
struct PerK {
    rows: Vec<Vec<f64>>,
    log: InvariantLog,
}

fn tdse_worker(
    k: f64,
    cfg: &ScenarioConfig,
    model: &dyn BandModel,
    waveform: &dyn Waveform,
    sched: &Schedule,
) -> Result<PerK, ScenarioError> {
    let bloch = crate::bases::bloch_snapshot(model, k)?;
    let mut psi = StateVector::from_band(&bloch, 0);
    let mut trackers: Vec<BasisTracker> = cfg
        .bases
        .iter()
        .map(|&kind| BasisTracker::new(kind, model, waveform, k, 0.0))
        .collect::<Result<_, _>>()?;

    let mut log = InvariantLog::fresh();
    let mut rows = Vec::with_capacity(sched.output_steps.len());
    let mut next_out = 0usize;
    for step in 0..=sched.n_steps {
        let t = step as f64 * sched.dt;
        let sample = next_out < sched.output_steps.len() && sched.output_steps[next_out] == step;
        if sample || step % 1000 == 0 {
            log.max_norm_drift = log.max_norm_drift.max((psi.norm() - 1.0).abs());
        }
        if sample {
            next_out += 1;
            let mut row = Vec::with_capacity(cfg.bases.len() + 1);
            for tr in &trackers {
                row.push(conduction_population(StateRef::Pure(&psi), tr, t, sched.dt)?);
                debug_assert!(tr.snapshot().orthonormality_defect() < 1e-10);
            }
            row.push(current(StateRef::Pure(&psi), model, waveform, k, t));
            rows.push(row);
        }
        if step < sched.n_steps {
            psi = tdse_step(&psi, k, t, sched.dt, model, waveform)?;
            for tr in trackers.iter_mut() {
                tr.step(model, waveform, sched.dt)?;
            }
        }
    }
    Ok(PerK { rows, log })
}

fn master_worker(
    k: f64,
    cfg: &ScenarioConfig,
    reference: BasisKind,
    model: &dyn BandModel,
    waveform: &dyn Waveform,
    sched: &Schedule,
    project_bases: bool,
) -> Result<PerK, ScenarioError> {
    let mut state = MasterState::ground_state(reference, model, waveform, k, 0.0)?;
    // Projection trackers for requested bases other than the reference (whose
    // tracker already rides along inside the master state).
    let mut extra: Vec<BasisTracker> = if project_bases {
        cfg.bases
            .iter()
            .filter(|&&kind| kind != reference)
            .map(|&kind| BasisTracker::new(kind, model, waveform, k, 0.0))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };

    let mut log = InvariantLog::fresh();
    let mut rows = Vec::with_capacity(sched.output_steps.len());
    let mut next_out = 0usize;
    for step in 0..=sched.n_steps {
        let t = step as f64 * sched.dt;
        let sample = next_out < sched.output_steps.len() && sched.output_steps[next_out] == step;
        if sample || step % 1000 == 0 {
            log.observe_rho(&state.rho);
        }
        if sample {
            next_out += 1;
            let mut row = Vec::new();
            if project_bases {
                for &kind in &cfg.bases {
                    let tracker = if kind == reference {
                        &state.tracker
                    } else {
                        extra.iter().find(|tr| tr.kind() == kind).expect("tracker exists")
                    };
                    row.push(conduction_population(StateRef::Density(&state.rho), tracker, t, sched.dt)?);
                }
            }
            row.push(current(StateRef::Density(&state.rho), model, waveform, k, t));
            rows.push(row);
        }
        if step < sched.n_steps {
            master_step(&mut state, k, t, sched.dt, model, waveform, &cfg.relaxation)?;
            for tr in extra.iter_mut() {
                tr.step(model, waveform, sched.dt)?;
            }
        }
    }
    Ok(PerK { rows, log })
}

/// Sweep every k in parallel and reduce rows in fixed grid order.
fn sweep<F>(grid: &KGrid, worker: F) -> Result<(Vec<Vec<f64>>, InvariantLog), ScenarioError>
where
    F: Fn(f64) -> Result<PerK, ScenarioError> + Sync,
{
    let per_k: Vec<PerK> = grid
        .points()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| worker(k))
        .collect::<Result<_, _>>()?;

    let n_out = per_k[0].rows.len();
    let n_ch = per_k[0].rows[0].len();
    let mut log = InvariantLog::fresh();
    let mut averaged = vec![vec![0.0; n_ch]; n_out];
    // Fixed-order reduction: sum k strictly in grid order per (row, channel).
    for (row, avg) in averaged.iter_mut().enumerate() {
        for ch in 0..n_ch {
            let values: Vec<f64> = per_k.iter().map(|p| p.rows[row][ch]).collect();
            avg[ch] = values.iter().sum::<f64>() / values.len() as f64;
        }
    }
    for p in &per_k {
        log.absorb(&p.log);
    }
    Ok((averaged, log))
}

fn sbe_engine(
    cfg: &ScenarioConfig,
    model: &dyn BandModel,
    waveform: &dyn Waveform,
    sched: &Schedule,
) -> Result<(ObservableSeries, InvariantLog), ScenarioError> {
    let grid = KGrid::new(cfg.n_k, model.lattice_constant())?;
    let sbe = SbePropagator::new(model, grid, StencilOrder::Fourth)?;
    let mut rho = sbe.ground_state(model.n_bands());
    let mut log = InvariantLog::fresh();

    let mut series = ObservableSeries::new(&["A_au", "E_au", "n_H", "J_au"]);
    let mut next_out = 0usize;
    for step in 0..=sched.n_steps {
        let t = step as f64 * sched.dt;
        let sample = next_out < sched.output_steps.len() && sched.output_steps[next_out] == step;
        if sample {
            next_out += 1;
            let n_ext = sbe.n_ext() as f64;
            let mut n_c = 0.0;
            let mut j = 0.0;
            for jdx in 0..sbe.n_ext() {
                log.observe_rho(&rho[jdx]);
                for b in 1..model.n_bands() {
                    n_c += rho[jdx][(b, b)].re;
                }
                j += sbe_current_at(&sbe, model, jdx, &rho[jdx]);
            }
            series.push_row(
                units::au_to_fs(t),
                &[waveform.a_at(t), waveform.e_at(t), n_c / n_ext, j / n_ext],
            );
        }
        if step < sched.n_steps {
            sbe.step(&mut rho, t, sched.dt, waveform, &cfg.relaxation)?;
        }
    }
    Ok((series, log))
}

/// Current contribution of one SBE grid point:
/// J = −Σ_ab ⟨u_a|∂H/∂κ|u_b⟩ ρ_ba in the point's own band basis.
fn sbe_current_at(sbe: &SbePropagator, model: &dyn BandModel, j: usize, rho: &BandMatrix) -> f64 {
    let states = sbe.state_at(j);
    let n = sbe.energies_at(j).len();
    let dh = model.hamiltonian_derivative_at(sbe.label(j));
    let mut total = 0.0;
    for a in 0..n {
        let ua = states.column(a);
        for b in 0..n {
            let ub = states.column(b);
            let me = crate::bandmodel::inner(&ua, &dh.matvec(&ub));
            total -= (me * rho[(b, a)]).re;
        }
    }
    total
}

/// Execute the configured scenario and return the BZ-averaged series plus the
/// run report (checks not yet attached).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(ObservableSeries, RunReport), ScenarioError> {
    let started = std::time::Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .expect("thread pool");
    let threads = pool.current_num_threads();

    let model = cfg.make_model();
    let waveform = cfg.make_waveform();
    let sched = Schedule::from_config(cfg);
    let grid = KGrid::new(cfg.n_k, model.lattice_constant())?;

    let (series, log) = pool.install(|| -> Result<(ObservableSeries, InvariantLog), ScenarioError> {
        match cfg.engine {
            EngineKind::Tdse => {
                let (rows, log) =
                    sweep(&grid, |k| tdse_worker(k, cfg, &model, waveform.as_ref(), &sched))?;
                let mut names: Vec<String> = vec!["A_au".into(), "E_au".into()];
                for kind in &cfg.bases {
                    names.push(format!("n_{}", kind.channel_suffix()));
                }
                names.push("J_au".into());
                let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                let mut series = ObservableSeries::new(&name_refs);
                for (i, &step) in sched.output_steps.iter().enumerate() {
                    let t = step as f64 * sched.dt;
                    let mut row = vec![waveform.a_at(t), waveform.e_at(t)];
                    row.extend_from_slice(&rows[i]);
                    series.push_row(units::au_to_fs(t), &row);
                }
                Ok((series, log))
            }
            EngineKind::Master if cfg.compare_references => {
                // One master run per reference basis plus the bare Schrödinger
                // run; channels carry the current of each.
                let mut j_channels: Vec<(String, Vec<f64>)> = Vec::new();
                let mut log = InvariantLog::fresh();
                for kind in BasisKind::ALL {
                    let (rows, l) = sweep(&grid, |k| {
                        master_worker(k, cfg, kind, &model, waveform.as_ref(), &sched, false)
                    })?;
                    log.absorb(&l);
                    j_channels.push((
                        format!("J_{}_au", kind.as_str()),
                        rows.iter().map(|r| r[0]).collect(),
                    ));
                }
                let (rows, l) =
                    sweep(&grid, |k| tdse_worker(k, cfg, &model, waveform.as_ref(), &sched))?;
                log.absorb(&l);
                let j_idx = cfg.bases.len(); // J follows the population channels
                j_channels.push(("J_tdse_au".into(), rows.iter().map(|r| r[j_idx]).collect()));

                let mut names: Vec<String> = vec!["A_au".into(), "E_au".into()];
                names.extend(j_channels.iter().map(|(n, _)| n.clone()));
                let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                let mut series = ObservableSeries::new(&name_refs);
                for (i, &step) in sched.output_steps.iter().enumerate() {
                    let t = step as f64 * sched.dt;
                    let mut row = vec![waveform.a_at(t), waveform.e_at(t)];
                    for (_, v) in &j_channels {
                        row.push(v[i]);
                    }
                    series.push_row(units::au_to_fs(t), &row);
                }
                Ok((series, log))
            }
            EngineKind::Master => {
                let (rows, log) = sweep(&grid, |k| {
                    master_worker(k, cfg, cfg.reference, &model, waveform.as_ref(), &sched, true)
                })?;
                let mut names: Vec<String> = vec!["A_au".into(), "E_au".into()];
                for kind in &cfg.bases {
                    names.push(format!("n_{}", kind.channel_suffix()));
                }
                names.push("J_au".into());
                let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                let mut series = ObservableSeries::new(&name_refs);
                for (i, &step) in sched.output_steps.iter().enumerate() {
                    let t = step as f64 * sched.dt;
                    let mut row = vec![waveform.a_at(t), waveform.e_at(t)];
                    row.extend_from_slice(&rows[i]);
                    series.push_row(units::au_to_fs(t), &row);
                }
                Ok((series, log))
            }
            EngineKind::Sbe => sbe_engine(cfg, &model, waveform.as_ref(), &sched),
        }
    })?;

    let mut notes = Vec::new();
    if log.min_rho_eigenvalue.is_finite() && log.min_rho_eigenvalue < -1e-6 {
        notes.push(format!(
            "density-matrix positivity violated beyond tolerance: min eigenvalue {:.3e} \
             (the relaxation-time form is not completely positive)",
            log.min_rho_eigenvalue
        ));
    }

    let report = RunReport {
        preset: cfg.preset.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_seconds: started.elapsed().as_secs_f64(),
        threads,
        config_echo: cfg.echo.clone(),
        invariants: log,
        checks: Vec::new(),
        notes,
        output_digest: None,
    };
    Ok((series, report))
}
