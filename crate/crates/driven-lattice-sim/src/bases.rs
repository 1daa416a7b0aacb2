//! The three reference bases: Bloch, Houston, and polarized Houston.
//!
//! All three are per-k families of orthonormal band-space states used as
//! projection targets and as reference states of the relaxation-time
//! dissipator.
//!
//! * The Bloch basis diagonalizes the field-free H(k) and never moves.
//! * The Houston basis diagonalizes H(k + A(t)); its gauge is carried through
//!   time by parallel transport, which realizes the geometric phase, while the
//!   dynamical phase −∫ε dt′ is accumulated separately.
//! * The polarized Houston basis additionally diagonalizes the length-gauge
//!   effective Hamiltonian (instantaneous energies on the diagonal, field ×
//!   dipole couplings off it) and composes the resulting coefficient vectors
//!   with the adiabatic states, folding field-induced polarization into the
//!   reference states. Its geometric phase γᴾ is accumulated by parallel
//!   transport of the coefficient vectors.
//!
//! Snapshots are recomputed on the fly while propagating — memory per k stays
//! O(n_bands²) regardless of the number of time steps.

use num_complex::Complex64;

use crate::bandmodel::{shifted_wavevector, BandMatrix, BandModel};
use crate::fields::Waveform;
use crate::spectral::{
    dipole_elements_for, eigensystem, parallel_transport, EigenSystem, SpectralError,
};

/// Which reference basis a snapshot belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisKind {
    Bloch,
    Houston,
    PolarizedHouston,
}

impl BasisKind {
    pub const ALL: [BasisKind; 3] = [BasisKind::Bloch, BasisKind::Houston, BasisKind::PolarizedHouston];

    /// Config-file spelling.
    pub fn as_str(&self) -> &'static str {
        match self {
            BasisKind::Bloch => "bloch",
            BasisKind::Houston => "houston",
            BasisKind::PolarizedHouston => "polarized",
        }
    }

    pub fn parse(s: &str) -> Option<BasisKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bloch" => Some(BasisKind::Bloch),
            "houston" => Some(BasisKind::Houston),
            "polarized" | "polarized_houston" => Some(BasisKind::PolarizedHouston),
            _ => None,
        }
    }

    /// Channel suffix in CSV output (n_B, n_H, n_PH).
    pub fn channel_suffix(&self) -> &'static str {
        match self {
            BasisKind::Bloch => "B",
            BasisKind::Houston => "H",
            BasisKind::PolarizedHouston => "PH",
        }
    }
}

impl std::fmt::Display for BasisKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-k, per-time set of reference states with energies and accumulated
/// phases. `states` columns are orthonormal band-space vectors; phases are
/// bookkeeping (every observable in this crate is phase-invariant, which the
/// observables module asserts).
#[derive(Clone, Debug)]
pub struct BasisSnapshot {
    pub kind: BasisKind,
    /// Unshifted wavevector label k.
    pub k: f64,
    pub t: f64,
    /// Shifted wavevector k + A(t) the states are evaluated at.
    pub kappa: f64,
    pub states: BandMatrix,
    pub energies: Vec<f64>,
    /// Accumulated −∫ε dt′ per band.
    pub dyn_phase: Vec<f64>,
    /// Accumulated geometric phase per band.
    pub geo_phase: Vec<f64>,
}

impl BasisSnapshot {
    pub fn n_bands(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, band: usize) -> Vec<Complex64> {
        self.states.column(band)
    }

    /// max |⟨u_a|u_b⟩ − δ_ab| over all pairs.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.n_bands();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            let ua = self.state(a);
            for b in a..n {
                let ov = crate::bandmodel::inner(&ua, &self.state(b));
                let expect = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((ov - Complex64::new(expect, 0.0)).norm());
            }
        }
        worst
    }
}

/// Field-free eigenbasis at k. Time-independent; phases stay zero.
pub fn bloch_snapshot(model: &dyn BandModel, k: f64) -> Result<BasisSnapshot, SpectralError> {
    let eig = eigensystem(&model.hamiltonian_at(k))?;
    let n = eig.dim();
    Ok(BasisSnapshot {
        kind: BasisKind::Bloch,
        k,
        t: 0.0,
        kappa: k,
        states: eig.states,
        energies: eig.energies,
        dyn_phase: vec![0.0; n],
        geo_phase: vec![0.0; n],
    })
}

/// Start a Houston (or adiabatic) history at time `t0`, where the gauge is
/// pinned canonically; the field is expected to be off at `t0`.
pub fn houston_snapshot_at_start(
    model: &dyn BandModel,
    waveform: &dyn Waveform,
    k: f64,
    t0: f64,
) -> Result<BasisSnapshot, SpectralError> {
    let kappa = shifted_wavevector(k, waveform.a_at(t0));
    let eig = eigensystem(&model.hamiltonian_at(kappa))?;
    let n = eig.dim();
    Ok(BasisSnapshot {
        kind: BasisKind::Houston,
        k,
        t: t0,
        kappa,
        states: eig.states,
        energies: eig.energies,
        dyn_phase: vec![0.0; n],
        geo_phase: vec![0.0; n],
    })
}

/// Advance a Houston snapshot from its own time `t` to `t + dt`: diagonalize
/// at the new shifted wavevector, parallel-transport the gauge, and accumulate
/// the dynamical phase by trapezoid quadrature.
pub fn houston_step(
    snapshot: &BasisSnapshot,
    model: &dyn BandModel,
    waveform: &dyn Waveform,
    dt: f64,
) -> Result<BasisSnapshot, SpectralError> {
    debug_assert_eq!(snapshot.kind, BasisKind::Houston);
    let t_new = snapshot.t + dt;
    let kappa = shifted_wavevector(snapshot.k, waveform.a_at(t_new));
    let eig = eigensystem(&model.hamiltonian_at(kappa))?;
    let transported = parallel_transport(&snapshot.states, &eig)?;

    let n = snapshot.n_bands();
    let mut dyn_phase = snapshot.dyn_phase.clone();
    let mut geo_phase = snapshot.geo_phase.clone();
    for b in 0..n {
        dyn_phase[b] -= 0.5 * (snapshot.energies[b] + transported.energies[b]) * dt;
        geo_phase[b] += transported.applied_phase[b];
    }

    Ok(BasisSnapshot {
        kind: BasisKind::Houston,
        k: snapshot.k,
        t: t_new,
        kappa,
        states: transported.states,
        energies: transported.energies,
        dyn_phase,
        geo_phase,
    })
}

/// Length-gauge effective Hamiltonian: instantaneous eigenvalues on the
/// diagonal, i E(t)·⟨u_b|∂_κ u_b′⟩ couplings off it (energy units).
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    pub matrix: BandMatrix,
}

/// Build the effective Hamiltonian from an adiabatic snapshot (whose states
/// fix the gauge of the dipole couplings) and the instantaneous field E.
pub fn effective_hamiltonian(
    adiabatic: &BasisSnapshot,
    model: &dyn BandModel,
    e_field: f64,
) -> Result<EffectiveHamiltonian, SpectralError> {
    let eig = EigenSystem { energies: adiabatic.energies.clone(), states: adiabatic.states.clone() };
    let d = dipole_elements_for(model, adiabatic.kappa, &eig)?;
    let n = adiabatic.n_bands();
    let mut h = BandMatrix::zeros(n);
    for b in 0..n {
        h[(b, b)] = Complex64::new(adiabatic.energies[b], 0.0);
        for c in 0..n {
            if b != c {
                h[(b, c)] = Complex64::new(e_field, 0.0) * d[(b, c)];
            }
        }
    }
    debug_assert!(h.is_hermitian_within(1e-12 * h.frobenius_norm().max(1e-300)));
    Ok(EffectiveHamiltonian { matrix: h })
}

/// Polarized-Houston history: the adiabatic gauge, the coefficient vectors
/// cᴾ of the effective-Hamiltonian eigenproblem (columns), and the composed
/// snapshot uᴾ = Σ cᴾ uᴬ exposed to callers.
#[derive(Clone, Debug)]
pub struct PolarizedState {
    pub adiabatic: BasisSnapshot,
    pub coeff: BandMatrix,
    pub snapshot: BasisSnapshot,
}

impl PolarizedState {
    pub fn new(
        model: &dyn BandModel,
        waveform: &dyn Waveform,
        k: f64,
        t0: f64,
    ) -> Result<Self, SpectralError> {
        let mut adiabatic = houston_snapshot_at_start(model, waveform, k, t0)?;
        adiabatic.kind = BasisKind::Houston;
        let n = adiabatic.n_bands();
        let h_eff = effective_hamiltonian(&adiabatic, model, waveform.e_at(t0))?;
        let eig = eigensystem(&h_eff.matrix)?;
        let coeff = parallel_transport(&BandMatrix::identity(n), &eig)?;
        let snapshot = compose_snapshot(&adiabatic, &coeff.states, &coeff.energies, &vec![0.0; n], &vec![0.0; n]);
        Ok(PolarizedState { adiabatic, coeff: coeff.states, snapshot })
    }
}

fn compose_snapshot(
    adiabatic: &BasisSnapshot,
    coeff: &BandMatrix,
    energies: &[f64],
    dyn_phase: &[f64],
    geo_phase: &[f64],
) -> BasisSnapshot {
    BasisSnapshot {
        kind: BasisKind::PolarizedHouston,
        k: adiabatic.k,
        t: adiabatic.t,
        kappa: adiabatic.kappa,
        states: adiabatic.states.matmul(coeff),
        energies: energies.to_vec(),
        dyn_phase: dyn_phase.to_vec(),
        geo_phase: geo_phase.to_vec(),
    }
}

/// Advance a polarized-Houston history by `dt`: step the adiabatic gauge,
/// rebuild and diagonalize the effective Hamiltonian at the new time, and
/// parallel-transport the coefficient vectors (which accumulates γᴾ).
pub fn polarized_step(
    state: &PolarizedState,
    model: &dyn BandModel,
    waveform: &dyn Waveform,
    dt: f64,
) -> Result<PolarizedState, SpectralError> {
    let adiabatic = houston_step(&state.adiabatic, model, waveform, dt)?;
    let h_eff = effective_hamiltonian(&adiabatic, model, waveform.e_at(adiabatic.t))?;
    let eig = eigensystem(&h_eff.matrix)?;
    let transported = parallel_transport(&state.coeff, &eig)?;

    let n = adiabatic.n_bands();
    let mut dyn_phase = state.snapshot.dyn_phase.clone();
    let mut geo_phase = state.snapshot.geo_phase.clone();
    for b in 0..n {
        dyn_phase[b] -= 0.5 * (state.snapshot.energies[b] + transported.energies[b]) * dt;
        geo_phase[b] += transported.applied_phase[b];
    }
    let snapshot = compose_snapshot(&adiabatic, &transported.states, &transported.energies, &dyn_phase, &geo_phase);
    Ok(PolarizedState { adiabatic, coeff: transported.states, snapshot })
}

/// One evolving reference basis at a single k-point. Owned by exactly one
/// worker during a run; distinct k-points never share trackers.
#[derive(Clone, Debug)]
pub enum BasisTracker {
    Bloch(BasisSnapshot),
    Houston(BasisSnapshot),
    Polarized(PolarizedState),
}

impl BasisTracker {
    pub fn new(
        kind: BasisKind,
        model: &dyn BandModel,
        waveform: &dyn Waveform,
        k: f64,
        t0: f64,
    ) -> Result<Self, SpectralError> {
        Ok(match kind {
            BasisKind::Bloch => {
                let mut s = bloch_snapshot(model, k)?;
                s.t = t0;
                BasisTracker::Bloch(s)
            }
            BasisKind::Houston => BasisTracker::Houston(houston_snapshot_at_start(model, waveform, k, t0)?),
            BasisKind::PolarizedHouston => BasisTracker::Polarized(PolarizedState::new(model, waveform, k, t0)?),
        })
    }

    pub fn kind(&self) -> BasisKind {
        match self {
            BasisTracker::Bloch(_) => BasisKind::Bloch,
            BasisTracker::Houston(_) => BasisKind::Houston,
            BasisTracker::Polarized(_) => BasisKind::PolarizedHouston,
        }
    }

    /// Advance the tracker from its current time by `dt`.
    pub fn step(
        &mut self,
        model: &dyn BandModel,
        waveform: &dyn Waveform,
        dt: f64,
    ) -> Result<(), SpectralError> {
        match self {
            BasisTracker::Bloch(s) => {
                s.t += dt;
                Ok(())
            }
            BasisTracker::Houston(s) => {
                *s = houston_step(s, model, waveform, dt)?;
                Ok(())
            }
            BasisTracker::Polarized(p) => {
                *p = polarized_step(p, model, waveform, dt)?;
                Ok(())
            }
        }
    }

    pub fn snapshot(&self) -> &BasisSnapshot {
        match self {
            BasisTracker::Bloch(s) => s,
            BasisTracker::Houston(s) => s,
            BasisTracker::Polarized(p) => &p.snapshot,
        }
    }
}
