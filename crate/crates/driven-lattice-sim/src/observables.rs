//! Population projections onto the reference bases, the macroscopic current,
//! and Brillouin-zone averaging.
//!
//! Populations are stored as BZ-averaged dimensionless occupations per
//! k-state; every projection depends only on moduli or diagonal matrix
//! elements, so the snapshot phases cancel identically.

use num_complex::Complex64;

use crate::bandmodel::{inner, shifted_wavevector, BandMatrix, BandModel};
use crate::bases::BasisSnapshot;
use crate::dynamics::{KGrid, StateVector};
use crate::fields::Waveform;

#[derive(Debug, thiserror::Error)]
pub enum ObservableError {
    #[error("per-k values ({values}) do not match the grid ({grid})")]
    LengthMismatch { values: usize, grid: usize },
    #[error("snapshot time {snapshot_t} does not match state time {state_t} (beyond dt/2 = {tol})")]
    MismatchedTime { snapshot_t: f64, state_t: f64, tol: f64 },
}

/// A quantum state at one k: either a pure state vector or a density matrix.
#[derive(Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a StateVector),
    Density(&'a BandMatrix),
}

/// Occupation of `band` of the snapshot's basis:
/// |⟨u_b|ψ⟩|² for pure states, ⟨u_b|ρ|u_b⟩ for density matrices.
///
/// `state_t` is the time the state belongs to; it must match the snapshot
/// time to within `dt_tol` (half a propagation step).
pub fn project_population(
    state: StateRef<'_>,
    snapshot: &BasisSnapshot,
    band: usize,
    state_t: f64,
    dt_tol: f64,
) -> Result<f64, ObservableError> {
    if (snapshot.t - state_t).abs() > dt_tol {
        return Err(ObservableError::MismatchedTime {
            snapshot_t: snapshot.t,
            state_t,
            tol: dt_tol,
        });
    }
    let u = snapshot.state(band);
    Ok(match state {
        StateRef::Pure(psi) => inner(&u, &psi.0).norm_sqr(),
        StateRef::Density(rho) => inner(&u, &rho.matvec(&u)).re,
    })
}

/// Uniform-grid Brillouin-zone average (1/N_k)·Σ_k value_k — the exact
/// trapezoid rule for periodic integrands with the a_L/2π measure. The sum
/// runs in grid order so results are bit-reproducible across thread counts.
pub fn bz_average(per_k: &[f64], grid: &KGrid) -> Result<f64, ObservableError> {
    if per_k.len() != grid.n_k {
        return Err(ObservableError::LengthMismatch { values: per_k.len(), grid: grid.n_k });
    }
    Ok(per_k.iter().sum::<f64>() / grid.n_k as f64)
}

/// Per-k current Tr[Ĵ ρ] (or ⟨ψ|Ĵ|ψ⟩) with Ĵ = −∂H/∂κ evaluated at the
/// shifted wavevector κ = k + A(t). BZ-average the per-k values to obtain
/// the macroscopic current.
pub fn current(
    state: StateRef<'_>,
    model: &dyn BandModel,
    waveform: &dyn Waveform,
    k: f64,
    t: f64,
) -> f64 {
    let kappa = shifted_wavevector(k, waveform.a_at(t));
    let j_op = model.hamiltonian_derivative_at(kappa).scaled(Complex64::new(-1.0, 0.0));
    match state {
        StateRef::Pure(psi) => inner(&psi.0, &j_op.matvec(&psi.0)).re,
        StateRef::Density(rho) => j_op.matmul(rho).trace().re,
    }
}

/// Time-stamped scalar channels (populations per basis, current, fields)
/// produced by a run. Times are in femtoseconds; channel values keep their
/// natural atomic units.
#[derive(Clone, Debug, Default)]
pub struct ObservableSeries {
    pub times_fs: Vec<f64>,
    pub channels: Vec<(String, Vec<f64>)>,
}

impl ObservableSeries {
    pub fn new(channel_names: &[&str]) -> Self {
        ObservableSeries {
            times_fs: Vec::new(),
            channels: channel_names.iter().map(|n| (n.to_string(), Vec::new())).collect(),
        }
    }

    /// Append one output row; `values` must follow the channel order.
    pub fn push_row(&mut self, t_fs: f64, values: &[f64]) {
        assert_eq!(values.len(), self.channels.len(), "row width mismatch");
        if let Some(&last) = self.times_fs.last() {
            assert!(t_fs > last, "times must be strictly increasing");
        }
        self.times_fs.push(t_fs);
        for (ch, &v) in self.channels.iter_mut().zip(values.iter()) {
            ch.1.push(v);
        }
    }

    pub fn len(&self) -> usize {
        self.times_fs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_fs.is_empty()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

/// Pearson correlation between two equally long series.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y.iter()) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx.sqrt() * syy.sqrt()).max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandmodel::DimerChain;
    use crate::bases::bloch_snapshot;
    use crate::fields::StaticRamp;
    use crate::spectral::eigensystem;

    fn model() -> DimerChain {
        DimerChain::default()
    }

    fn field_off() -> StaticRamp {
        StaticRamp { e_dc: 0.0, t_dc: 1.0 }
    }

    #[test]
    fn ground_state_projections() {
        let m = model();
        let k = 0.3;
        let snap = bloch_snapshot(&m, k).unwrap();
        let psi = StateVector::from_band(&snap, 0);
        let nv = project_population(StateRef::Pure(&psi), &snap, 0, 0.0, 0.1).unwrap();
        let nc = project_population(StateRef::Pure(&psi), &snap, 1, 0.0, 0.1).unwrap();
        assert!((nv - 1.0).abs() < 1e-15);
        assert!(nc < 1e-30);
        // Completeness.
        assert!((nv + nc - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projection_phase_invariance() {
        let m = model();
        let k = 0.77;
        let snap = bloch_snapshot(&m, k).unwrap();
        let psi = StateVector(vec![Complex64::new(0.6, 0.1), Complex64::new(-0.2, 0.7745)]);
        let base = project_population(StateRef::Pure(&psi), &snap, 1, 0.0, 0.1).unwrap();

        let mut rotated = snap.clone();
        let col: Vec<Complex64> = snap
            .state(1)
            .iter()
            .map(|x| x * Complex64::from_polar(1.0, 1.234))
            .collect();
        rotated.states.set_column(1, &col);
        let turned = project_population(StateRef::Pure(&psi), &rotated, 1, 0.0, 0.1).unwrap();
        assert!((base - turned).abs() <= 4.0 * f64::EPSILON * base.abs());

        // Density route too.
        let mut rho = BandMatrix::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                rho[(i, j)] = psi.0[i] * psi.0[j].conj();
            }
        }
        let b2 = project_population(StateRef::Density(&rho), &snap, 1, 0.0, 0.1).unwrap();
        let t2 = project_population(StateRef::Density(&rho), &rotated, 1, 0.0, 0.1).unwrap();
        assert!((b2 - t2).abs() <= 4.0 * f64::EPSILON * b2.abs());
    }

    #[test]
    fn mismatched_time_rejected() {
        let m = model();
        let snap = bloch_snapshot(&m, 0.1).unwrap();
        let psi = StateVector::from_band(&snap, 0);
        let r = project_population(StateRef::Pure(&psi), &snap, 0, 5.0, 0.05);
        assert!(matches!(r, Err(ObservableError::MismatchedTime { .. })));
    }

    #[test]
    fn bz_average_contract() {
        let m = model();
        let grid = KGrid::new(64, m.lattice_constant()).unwrap();
        let constant = vec![0.37; 64];
        assert!((bz_average(&constant, &grid).unwrap() - 0.37).abs() < 1e-15);

        let cosine: Vec<f64> = grid.points().map(|k| (m.lattice_constant() * k).cos()).collect();
        assert!(bz_average(&cosine, &grid).unwrap().abs() < 1e-14);

        assert!(matches!(
            bz_average(&[1.0], &grid),
            Err(ObservableError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn filled_valence_band_carries_no_current() {
        let m = model();
        let w = field_off();
        let grid = KGrid::new(64, m.lattice_constant()).unwrap();
        let per_k: Vec<f64> = grid
            .points()
            .map(|k| {
                let snap = bloch_snapshot(&m, k).unwrap();
                let psi = StateVector::from_band(&snap, 0);
                current(StateRef::Pure(&psi), &m, &w, k, 0.0)
            })
            .collect();
        let j = bz_average(&per_k, &grid).unwrap();
        assert!(j.abs() < 1e-13, "net current {j:e}");
    }

    #[test]
    fn single_state_current_equals_group_velocity() {
        let m = model();
        let w = StaticRamp { e_dc: 1e-3, t_dc: 50.0 };
        let k0 = 0.62;
        let t = 80.0;
        let kappa = k0 + w.a_at(t);
        let eig = eigensystem(&m.hamiltonian_at(kappa)).unwrap();
        for band in 0..2 {
            let psi = StateVector(eig.state(band));
            let j = current(StateRef::Pure(&psi), &m, &w, k0, t);
            // Group velocity by finite differences of the band energy.
            let dk = 1e-6;
            let ep = eigensystem(&m.hamiltonian_at(kappa + dk)).unwrap().energies[band];
            let em = eigensystem(&m.hamiltonian_at(kappa - dk)).unwrap().energies[band];
            let v_group = (ep - em) / (2.0 * dk);
            assert!((j + v_group).abs() < 1e-8, "band {band}: J {j:e} vs −v {v_group:e}");
        }
    }

    #[test]
    fn series_bookkeeping() {
        let mut s = ObservableSeries::new(&["A_au", "n_B"]);
        s.push_row(0.0, &[0.0, 1.0]);
        s.push_row(2.0, &[0.1, 0.9]);
        assert_eq!(s.len(), 2);
        assert_eq!(s.channel("n_B").unwrap()[1], 0.9);
        assert!(s.channel("missing").is_none());
    }

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        assert!((pearson_correlation(&x, &y) - 1.0).abs() < 1e-12);
        let z = [-1.0, -2.0, -3.0, -4.0];
        assert!((pearson_correlation(&x, &z) + 1.0).abs() < 1e-12);
    }
}
