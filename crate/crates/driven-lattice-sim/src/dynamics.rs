//! Time propagators: unitary Schrödinger stepping, the quantum master
//! equation with a relaxation-time dissipator over a selectable reference
//! basis, and the semiconductor Bloch equations as an independent
//! cross-check route.
//!
//! Integrator choices: the Schrödinger step uses the exponential-midpoint
//! rule (exact matrix exponential of H at the midpoint wavevector — exactly
//! unitary up to rounding, O(dt²) in the field); the master equation and the
//! SBE use classical RK4, since their relaxation parts are not anti-Hermitian
//! and exponential splitting would buy nothing.

use num_complex::Complex64;

use crate::bandmodel::{shifted_wavevector, BandMatrix, BandModel};
use crate::bases::{effective_hamiltonian, BasisKind, BasisSnapshot, BasisTracker};
use crate::fields::Waveform;
use crate::spectral::{eigensystem, SpectralError};

#[derive(Debug, thiserror::Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("k-grid too coarse for the field: |E|·dt/Δk = {0:.3} exceeds 0.5")]
    GridTooCoarse(f64),
    #[error("k-grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
}

/// Complex band-space amplitudes at one k.
#[derive(Clone, Debug)]
pub struct StateVector(pub Vec<Complex64>);

impl StateVector {
    pub fn from_band(snapshot: &BasisSnapshot, band: usize) -> Self {
        StateVector(snapshot.state(band))
    }

    pub fn norm(&self) -> f64 {
        crate::bandmodel::vec_norm(&self.0)
    }
}

/// exp(−i·H·dt) for Hermitian H. Two bands go through the closed Pauli form;
/// larger matrices are exponentiated through their eigensystem.
pub fn unitary_exp(h: &BandMatrix, dt: f64) -> Result<BandMatrix, SpectralError> {
    let n = h.dim();
    if n == 2 {
        let a = h[(0, 0)].re;
        let b = h[(1, 1)].re;
        let c = h[(0, 1)];
        let mean = 0.5 * (a + b);
        let half_diff = 0.5 * (a - b);
        let r = (half_diff * half_diff + c.norm_sqr()).sqrt();
        let global = Complex64::from_polar(1.0, -mean * dt);
        let mut u = BandMatrix::zeros(2);
        if r == 0.0 {
            u[(0, 0)] = global;
            u[(1, 1)] = global;
            return Ok(u);
        }
        let (sin_r, cos_r) = (r * dt).sin_cos();
        let f = -Complex64::i() * sin_r / r;
        u[(0, 0)] = global * (Complex64::new(cos_r, 0.0) + f * half_diff);
        u[(1, 1)] = global * (Complex64::new(cos_r, 0.0) - f * half_diff);
        u[(0, 1)] = global * f * c;
        u[(1, 0)] = global * f * c.conj();
        return Ok(u);
    }
    let eig = eigensystem(h)?;
    let mut u = BandMatrix::zeros(n);
    for b in 0..n {
        let phase = Complex64::from_polar(1.0, -eig.energies[b] * dt);
        let vb = eig.state(b);
        for i in 0..n {
            for j in 0..n {
                u[(i, j)] += phase * vb[i] * vb[j].conj();
            }
        }
    }
    Ok(u)
}

/// One exponential-midpoint Schrödinger step:
/// ψ′ = exp(−i·H(k + A(t + dt/2))·dt)·ψ.
pub fn tdse_step(
    psi: &StateVector,
    k: f64,
    t: f64,
    dt: f64,
    model: &dyn BandModel,
    waveform: &dyn Waveform,
) -> Result<StateVector, SpectralError> {
    let kappa = shifted_wavevector(k, waveform.a_at(t + 0.5 * dt));
    let u = unitary_exp(&model.hamiltonian_at(kappa), dt)?;
    Ok(StateVector(u.matvec(&psi.0)))
}

/// Fermi–Dirac occupation. `te` is the electron temperature in energy units
/// (k_B·T_e); at te = 0 the step-function limit applies with f(μ) = 1/2.
pub fn fermi_dirac(energy: f64, mu: f64, te: f64) -> f64 {
    if te <= 0.0 {
        return if energy < mu {
            1.0
        } else if energy > mu {
            0.0
        } else {
            0.5
        };
    }
    let x = ((energy - mu) / te).clamp(-700.0, 700.0);
    1.0 / (x.exp() + 1.0)
}

/// Relaxation-time parameters in atomic units. `t1`/`t2` may be infinite to
/// switch the corresponding channel off.
#[derive(Clone, Copy, Debug)]
pub struct RelaxationParams {
    pub t1: f64,
    pub t2: f64,
    pub mu: f64,
    /// Electron temperature in energy units (k_B·T_e).
    pub te: f64,
}

impl Default for RelaxationParams {
    /// T1 = T2 = 20 fs, μ = 0 (mid-gap), T_e = 0.
    fn default() -> Self {
        RelaxationParams {
            t1: crate::units::fs_to_au(20.0),
            t2: crate::units::fs_to_au(20.0),
            mu: 0.0,
            te: 0.0,
        }
    }
}

impl RelaxationParams {
    pub fn off() -> Self {
        RelaxationParams { t1: f64::INFINITY, t2: f64::INFINITY, mu: 0.0, te: 0.0 }
    }

    fn rate1(&self) -> f64 {
        if self.t1.is_finite() { 1.0 / self.t1 } else { 0.0 }
    }

    fn rate2(&self) -> f64 {
        if self.t2.is_finite() { 1.0 / self.t2 } else { 0.0 }
    }
}

/// Relaxation-time dissipator D[ρ] built on the reference basis of
/// `snapshot`: in that basis the diagonal is damped toward the Fermi–Dirac
/// occupation of the snapshot energies at rate 1/T1 and every off-diagonal
/// element at 1/T2. The snapshot phases cancel inside the projectors.
pub fn relaxation_apply(
    rho: &BandMatrix,
    snapshot: &BasisSnapshot,
    p: &RelaxationParams,
) -> BandMatrix {
    let n = rho.dim();
    let u = &snapshot.states;
    let m = u.dagger().matmul(rho).matmul(u);
    let mut d_ref = BandMatrix::zeros(n);
    let (r1, r2) = (p.rate1(), p.rate2());
    for a in 0..n {
        for b in 0..n {
            if a == b {
                let target = fermi_dirac(snapshot.energies[a], p.mu, p.te);
                d_ref[(a, a)] = -Complex64::new(r1, 0.0) * (m[(a, a)] - target);
            } else {
                d_ref[(a, b)] = -Complex64::new(r2, 0.0) * m[(a, b)];
            }
        }
    }
    u.matmul(&d_ref).matmul(&u.dagger())
}

/// Density matrix plus the reference-basis history at one k-point.
#[derive(Clone, Debug)]
pub struct MasterState {
    pub rho: BandMatrix,
    pub tracker: BasisTracker,
}

impl MasterState {
    /// Ground state (filled valence band) with a fresh tracker of the given
    /// reference kind, at time `t0`.
    pub fn ground_state(
        kind: BasisKind,
        model: &dyn BandModel,
        waveform: &dyn Waveform,
        k: f64,
        t0: f64,
    ) -> Result<Self, SpectralError> {
        let bloch = crate::bases::bloch_snapshot(model, k)?;
        let n = bloch.n_bands();
        let v = bloch.state(0);
        let mut rho = BandMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                rho[(i, j)] = v[i] * v[j].conj();
            }
        }
        Ok(MasterState { rho, tracker: BasisTracker::new(kind, model, waveform, k, t0)? })
    }
}

fn master_rhs(
    rho: &BandMatrix,
    kappa: f64,
    snapshot: &BasisSnapshot,
    model: &dyn BandModel,
    p: &RelaxationParams,
) -> BandMatrix {
    let h = model.hamiltonian_at(kappa);
    let mut rhs = h.commutator(rho).scaled(-Complex64::i());
    let d = relaxation_apply(rho, snapshot, p);
    rhs.axpy(Complex64::new(1.0, 0.0), &d);
    rhs
}

/// Advance the master equation dρ/dt = −i[H(k + A(t)), ρ] + D[ρ] by one RK4
/// step. The reference snapshot is advanced consistently through the
/// substeps (half-step transport chain), and ρ is re-symmetrized at the end.
pub fn master_step(
    state: &mut MasterState,
    k: f64,
    t: f64,
    dt: f64,
    model: &dyn BandModel,
    waveform: &dyn Waveform,
    p: &RelaxationParams,
) -> Result<(), SpectralError> {
    let snap_start = state.tracker.snapshot().clone();
    state.tracker.step(model, waveform, 0.5 * dt)?;
    let snap_mid = state.tracker.snapshot().clone();
    state.tracker.step(model, waveform, 0.5 * dt)?;
    let snap_end = state.tracker.snapshot();

    let kappa0 = shifted_wavevector(k, waveform.a_at(t));
    let kappa1 = shifted_wavevector(k, waveform.a_at(t + 0.5 * dt));
    let kappa2 = shifted_wavevector(k, waveform.a_at(t + dt));

    let k1 = master_rhs(&state.rho, kappa0, &snap_start, model, p);
    let mut y = state.rho.clone();
    y.axpy(Complex64::new(0.5 * dt, 0.0), &k1);
    let k2 = master_rhs(&y, kappa1, &snap_mid, model, p);
    let mut y = state.rho.clone();
    y.axpy(Complex64::new(0.5 * dt, 0.0), &k2);
    let k3 = master_rhs(&y, kappa1, &snap_mid, model, p);
    let mut y = state.rho.clone();
    y.axpy(Complex64::new(dt, 0.0), &k3);
    let k4 = master_rhs(&y, kappa2, snap_end, model, p);

    let sixth = dt / 6.0;
    state.rho.axpy(Complex64::new(sixth, 0.0), &k1);
    state.rho.axpy(Complex64::new(2.0 * sixth, 0.0), &k2);
    state.rho.axpy(Complex64::new(2.0 * sixth, 0.0), &k3);
    state.rho.axpy(Complex64::new(sixth, 0.0), &k4);
    state.rho.hermitize();
    Ok(())
}

/// One exponential-midpoint step of the length-gauge coefficient equation
/// i dc/dt = H_eff(t)·c, with H_eff built on the supplied midpoint adiabatic
/// snapshot. Together with the Houston projection of the Schrödinger
/// solution this is the velocity-/length-gauge equivalence pair.
pub fn effective_coefficient_step(
    c: &StateVector,
    adiabatic_mid: &BasisSnapshot,
    model: &dyn BandModel,
    e_mid: f64,
    dt: f64,
) -> Result<StateVector, SpectralError> {
    let h_eff = effective_hamiltonian(adiabatic_mid, model, e_mid)?;
    let u = unitary_exp(&h_eff.matrix, dt)?;
    Ok(StateVector(u.matvec(&c.0)))
}

/// Uniform k-grid over one Brillouin zone [0, 2π/a_L), endpoint excluded.
#[derive(Clone, Copy, Debug)]
pub struct KGrid {
    pub n_k: usize,
    /// Lattice constant (Bohr).
    pub a_l: f64,
}

impl KGrid {
    pub fn new(n_k: usize, a_l: f64) -> Result<Self, DynamicsError> {
        if n_k < 2 {
            return Err(DynamicsError::GridTooSmall(n_k));
        }
        Ok(KGrid { n_k, a_l })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.a_l * self.n_k as f64)
    }

    pub fn point(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_k).map(move |i| self.point(i))
    }
}

/// Finite-difference stencil order for the SBE advection term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StencilOrder {
    Second,
    Fourth,
}

/// Semiconductor Bloch equations on a k-grid:
/// dρ/dt = E·∂ρ/∂k − i[diag(ε) + E·d, ρ] + relaxation,
/// with the k-derivative by central finite differences, periodic wrap.
///
/// The grid internally spans the matrix period of the model (two zones for
/// the dimer chain) so that every coefficient field — energies, dipoles, and
/// the smooth transported gauge behind them — is exactly periodic across the
/// wrap; observables collapse back onto one zone.
pub struct SbePropagator {
    grid: KGrid,
    /// Number of stored points: matrix_period_zones × n_k.
    n_ext: usize,
    energies: Vec<Vec<f64>>,
    dipoles: Vec<BandMatrix>,
    /// Gauge states per extended grid point (columns = bands).
    states: Vec<BandMatrix>,
    order: StencilOrder,
}

impl SbePropagator {
    pub fn new(model: &dyn BandModel, grid: KGrid, order: StencilOrder) -> Result<Self, DynamicsError> {
        let zones = model.matrix_period_zones();
        let n_ext = zones * grid.n_k;
        let dk = grid.spacing();

        let mut energies = Vec::with_capacity(n_ext);
        let mut dipoles = Vec::with_capacity(n_ext);
        let mut states = Vec::with_capacity(n_ext);

        // Smooth periodic gauge by parallel transport along the extended grid.
        let mut prev: Option<BandMatrix> = None;
        for j in 0..n_ext {
            let k = j as f64 * dk;
            let eig = eigensystem(&model.hamiltonian_at(k))?;
            let (st, en) = match &prev {
                None => (eig.states.clone(), eig.energies.clone()),
                Some(p) => {
                    let tr = crate::spectral::parallel_transport(p, &eig)?;
                    (tr.states, tr.energies)
                }
            };
            let gauge = crate::spectral::EigenSystem { energies: en.clone(), states: st.clone() };
            let d = crate::spectral::dipole_elements_for(model, k, &gauge)?;
            prev = Some(st.clone());
            energies.push(en);
            dipoles.push(d);
            states.push(st);
        }

        Ok(SbePropagator { grid, n_ext, energies, dipoles, states, order })
    }

    pub fn n_ext(&self) -> usize {
        self.n_ext
    }

    /// Wavevector label of extended grid point `j`.
    pub fn label(&self, j: usize) -> f64 {
        j as f64 * self.grid.spacing()
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn state_at(&self, j: usize) -> &BandMatrix {
        &self.states[j]
    }

    pub fn energies_at(&self, j: usize) -> &[f64] {
        &self.energies[j]
    }

    /// Ground-state density matrices (filled valence band) on the extended grid.
    pub fn ground_state(&self, n_bands: usize) -> Vec<BandMatrix> {
        let mut rho = BandMatrix::zeros(n_bands);
        rho[(0, 0)] = Complex64::new(1.0, 0.0);
        vec![rho; self.n_ext]
    }

    fn rhs(&self, rho: &[BandMatrix], e_field: f64, p: &RelaxationParams) -> Vec<BandMatrix> {
        let n_ext = self.n_ext;
        let dk = self.grid.spacing();
        let n = rho[0].dim();
        let (r1, r2) = (p.rate1(), p.rate2());

        let mut out = Vec::with_capacity(n_ext);
        for j in 0..n_ext {
            // Advection E·∂ρ/∂k with periodic wrap on the extended domain.
            let mut adv = match self.order {
                StencilOrder::Second => {
                    let p1 = &rho[(j + 1) % n_ext];
                    let m1 = &rho[(j + n_ext - 1) % n_ext];
                    p1.sub(m1).scaled(Complex64::new(e_field / (2.0 * dk), 0.0))
                }
                StencilOrder::Fourth => {
                    let p1 = &rho[(j + 1) % n_ext];
                    let p2 = &rho[(j + 2) % n_ext];
                    let m1 = &rho[(j + n_ext - 1) % n_ext];
                    let m2 = &rho[(j + n_ext - 2) % n_ext];
                    let mut s = p1.sub(m1).scaled(Complex64::new(8.0, 0.0));
                    s.axpy(Complex64::new(-1.0, 0.0), p2);
                    s.axpy(Complex64::new(1.0, 0.0), m2);
                    s.scaled(Complex64::new(e_field / (12.0 * dk), 0.0))
                }
            };

            // −i[diag(ε) + E·d, ρ] plus relaxation, all in the band basis.
            let mut h = BandMatrix::from_diag(&self.energies[j]);
            h.axpy(Complex64::new(e_field, 0.0), &self.dipoles[j]);
            let comm = h.commutator(&rho[j]).scaled(-Complex64::i());
            adv.axpy(Complex64::new(1.0, 0.0), &comm);

            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        let target = fermi_dirac(self.energies[j][a], p.mu, p.te);
                        adv[(a, a)] -= Complex64::new(r1, 0.0) * (rho[j][(a, a)] - target);
                    } else {
                        adv[(a, b)] -= Complex64::new(r2, 0.0) * rho[j][(a, b)];
                    }
                }
            }
            out.push(adv);
        }
        out
    }

    /// Advance the whole grid synchronously by one RK4 step.
    pub fn step(
        &self,
        rho: &mut Vec<BandMatrix>,
        t: f64,
        dt: f64,
        waveform: &dyn Waveform,
        p: &RelaxationParams,
    ) -> Result<(), DynamicsError> {
        let e_max = waveform.e_at(t).abs().max(waveform.e_at(t + dt).abs());
        let courant = e_max * dt / self.grid.spacing();
        if courant > 0.5 {
            return Err(DynamicsError::GridTooCoarse(courant));
        }

        let stage = |base: &Vec<BandMatrix>, k_prev: Option<(&Vec<BandMatrix>, f64)>, tau: f64| {
            let mut y = base.clone();
            if let Some((kmat, w)) = k_prev {
                for (yj, kj) in y.iter_mut().zip(kmat.iter()) {
                    yj.axpy(Complex64::new(w, 0.0), kj);
                }
            }
            self.rhs(&y, waveform.e_at(tau), p)
        };

        let k1 = stage(rho, None, t);
        let k2 = stage(rho, Some((&k1, 0.5 * dt)), t + 0.5 * dt);
        let k3 = stage(rho, Some((&k2, 0.5 * dt)), t + 0.5 * dt);
        let k4 = stage(rho, Some((&k3, dt)), t + dt);

        let sixth = dt / 6.0;
        for j in 0..self.n_ext {
            rho[j].axpy(Complex64::new(sixth, 0.0), &k1[j]);
            rho[j].axpy(Complex64::new(2.0 * sixth, 0.0), &k2[j]);
            rho[j].axpy(Complex64::new(2.0 * sixth, 0.0), &k3[j]);
            rho[j].axpy(Complex64::new(sixth, 0.0), &k4[j]);
            rho[j].hermitize();
        }
        Ok(())
    }
}
