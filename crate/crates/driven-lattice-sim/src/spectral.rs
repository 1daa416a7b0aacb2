//! Dense Hermitian eigensolver, gauge fixing along paths, and Berry-phase
//! machinery.
//!
//! Two-band problems (the shipped dimer chain) hit a closed-form 2×2 branch;
//! anything larger falls back to cyclic Jacobi sweeps. Eigenvector phases are
//! fixed canonically at isolated points (largest-magnitude component made
//! real-positive) and by parallel transport along continuous paths, which is
//! what realizes the geometric phase of the adiabatic basis: aligning
//! ⟨u(t)|u(t+dt)⟩ to be real-positive accumulates exactly the Berry-connection
//! integral up to O(dt²).

use num_complex::Complex64;

use crate::bandmodel::{inner, vec_norm, BandMatrix, BandModel};

/// Default gap below which gauge-sensitive operations refuse to proceed (Hartree).
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, thiserror::Error)]
pub enum SpectralError {
    #[error("matrix is not Hermitian (max |M − M†| = {0:.3e})")]
    NonHermitianInput(f64),
    #[error("near-degenerate spectrum: min gap {gap:.3e} Ha below tolerance {tol:.3e}")]
    DegenerateSpectrum { gap: f64, tol: f64 },
    #[error("band matching failed: max |overlap| = {0:.3} ≤ 0.5 (dt too large or band crossing)")]
    BandMatchingFailure(f64),
}

/// Eigen-decomposition of a Hermitian band-space matrix.
///
/// Energies ascend strictly for gapped inputs; `states` holds the orthonormal
/// eigenvectors as columns, phase-fixed canonically.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub states: BandMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn state(&self, band: usize) -> Vec<Complex64> {
        self.states.column(band)
    }

    /// Smallest gap between adjacent energies.
    pub fn min_gap(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn require_nondegenerate(&self, tol: f64) -> Result<(), SpectralError> {
        let gap = self.min_gap();
        if gap < tol {
            Err(SpectralError::DegenerateSpectrum { gap, tol })
        } else {
            Ok(())
        }
    }
}

/// Multiply a vector by the unit phase that makes its largest-magnitude
/// component real-positive.
fn fix_phase_canonical(v: &mut [Complex64]) {
    let mut best = 0usize;
    let mut best_mag = 0.0;
    for (i, x) in v.iter().enumerate() {
        let m = x.norm_sqr();
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    let pivot = v[best];
    if pivot.norm() == 0.0 {
        return;
    }
    let phase = pivot.conj() / pivot.norm();
    for x in v.iter_mut() {
        *x *= phase;
    }
}

/// Closed-form eigensystem of a 2×2 Hermitian matrix.
fn eigensystem_2x2(h: &BandMatrix) -> EigenSystem {
    let a = h[(0, 0)].re;
    let b = h[(1, 1)].re;
    let c = h[(0, 1)];
    let mean = 0.5 * (a + b);
    let half_diff = 0.5 * (a - b);
    let r = (half_diff * half_diff + c.norm_sqr()).sqrt();
    let energies = vec![mean - r, mean + r];

    let (upper, lower) = if r == 0.0 {
        // Exactly degenerate: any orthonormal pair works.
        (
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        )
    } else if half_diff >= 0.0 {
        // (r + δ, c*) stays well-conditioned when c → 0 with a > b.
        let u = vec![Complex64::new(r + half_diff, 0.0), c.conj()];
        let l = vec![-c, Complex64::new(r + half_diff, 0.0)];
        (u, l)
    } else {
        let u = vec![c, Complex64::new(r - half_diff, 0.0)];
        let l = vec![Complex64::new(-(r - half_diff), 0.0), c.conj()];
        (u, l)
    };

    let mut states = BandMatrix::zeros(2);
    for (col, mut v) in [(0usize, lower), (1usize, upper)] {
        let n = vec_norm(&v);
        for x in v.iter_mut() {
            *x /= n;
        }
        fix_phase_canonical(&mut v);
        states.set_column(col, &v);
    }
    EigenSystem { energies, states }
}

/// Cyclic Jacobi iteration for Hermitian matrices of any size.
fn eigensystem_jacobi(h: &BandMatrix) -> EigenSystem {
    let n = h.dim();
    let mut a = h.clone();
    let mut v = BandMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() <= 1e-18 * scale {
                    continue;
                }
                // Unitary 2x2 rotation annihilating a[(p,q)]:
                // first strip the phase of apq, then a real Jacobi rotation.
                let phase = apq / apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cth = 1.0 / (1.0 + t * t).sqrt();
                let sth = t * cth;
                let s = phase * sth;

                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * cth - aiq * s.conj();
                    a[(i, q)] = aip * s + aiq * cth;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * cth - aqj * s;
                    a[(q, j)] = apj * s.conj() + aqj * cth;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * cth - viq * s.conj();
                    v[(i, q)] = vip * s + viq * cth;
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a[(i, i)].re, i)).collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut states = BandMatrix::zeros(n);
    let mut energies = Vec::with_capacity(n);
    for (out_col, (e, in_col)) in pairs.into_iter().enumerate() {
        energies.push(e);
        let mut col = v.column(in_col);
        let norm = vec_norm(&col);
        for x in col.iter_mut() {
            *x /= norm;
        }
        fix_phase_canonical(&mut col);
        states.set_column(out_col, &col);
    }
    EigenSystem { energies, states }
}

/// Eigensystem of a Hermitian band matrix with canonical phase fixing.
pub fn eigensystem(h: &BandMatrix) -> Result<EigenSystem, SpectralError> {
    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
    let nh = h.max_nonhermiticity();
    if nh > 1e-12 * scale {
        return Err(SpectralError::NonHermitianInput(nh));
    }
    Ok(if h.dim() == 2 { eigensystem_2x2(h) } else { eigensystem_jacobi(h) })
}

/// Result of one parallel-transport step.
pub struct Transport {
    /// Gauge-aligned new states (columns), matched band-per-band to the
    /// previous states.
    pub states: BandMatrix,
    /// Energies reordered to follow band lines.
    pub energies: Vec<f64>,
    /// Phase applied to each band, i.e. the geometric-phase increment.
    pub applied_phase: Vec<f64>,
}

/// Align `new` against `prev` so that every ⟨prev_b|new_b⟩ is real-positive.
///
/// Bands are matched by maximum overlap; an overlap magnitude at or below 0.5
/// signals a step too large for the band structure (or a crossing) and is an
/// error rather than a silent misassignment.
pub fn parallel_transport(prev: &BandMatrix, new: &EigenSystem) -> Result<Transport, SpectralError> {
    let n = prev.dim();
    let mut used = vec![false; n];
    let mut states = BandMatrix::zeros(n);
    let mut energies = vec![0.0; n];
    let mut applied_phase = vec![0.0; n];

    for b in 0..n {
        let prev_b = prev.column(b);
        let mut best = None;
        let mut best_mag = 0.0;
        for c in 0..n {
            if used[c] {
                continue;
            }
            let ov = inner(&prev_b, &new.states.column(c));
            let mag = ov.norm();
            if mag > best_mag {
                best_mag = mag;
                best = Some((c, ov));
            }
        }
        let (c, ov) = best.ok_or(SpectralError::BandMatchingFailure(0.0))?;
        if best_mag <= 0.5 {
            return Err(SpectralError::BandMatchingFailure(best_mag));
        }
        used[c] = true;
        let phase = ov.conj() / ov.norm();
        let mut col = new.states.column(c);
        for x in col.iter_mut() {
            *x *= phase;
        }
        states.set_column(b, &col);
        energies[b] = new.energies[c];
        applied_phase[b] = phase.im.atan2(phase.re);
    }

    Ok(Transport { states, energies, applied_phase })
}

/// Off-diagonal dipole matrix elements d_ab = i⟨u_a|∂H/∂κ|u_b⟩/(ε_b − ε_a)
/// in the canonical gauge at κ (Hellmann–Feynman form). The diagonal is zero.
///
/// The returned matrix is Hermitian: d_ba = d_ab*.
pub fn dipole_elements(model: &dyn BandModel, kappa: f64) -> Result<BandMatrix, SpectralError> {
    let eig = eigensystem(&model.hamiltonian_at(kappa))?;
    eig.require_nondegenerate(DEGENERACY_TOL)?;
    dipole_elements_for(model, kappa, &eig)
}

/// Same as [`dipole_elements`] but in the gauge of a caller-supplied
/// eigensystem at κ (whose states may carry transported phases).
pub fn dipole_elements_for(
    model: &dyn BandModel,
    kappa: f64,
    eig: &EigenSystem,
) -> Result<BandMatrix, SpectralError> {
    eig.require_nondegenerate(DEGENERACY_TOL)?;
    let n = eig.dim();
    let dh = model.hamiltonian_derivative_at(kappa);
    let mut d = BandMatrix::zeros(n);
    for a in 0..n {
        let ua = eig.state(a);
        let dh_ub: Vec<Vec<Complex64>> = (0..n).map(|b| dh.matvec(&eig.state(b))).collect();
        for b in 0..n {
            if a == b {
                continue;
            }
            let me = inner(&ua, &dh_ub[b]);
            d[(a, b)] = Complex64::i() * me / (eig.energies[b] - eig.energies[a]);
        }
    }
    Ok(d)
}

/// Per-band Berry connection A_b(κ) = i⟨u_b|∂_κ u_b⟩ by gauge-aligned central
/// differences, evaluated in the gauge of `gauge_states`.
pub fn berry_connection(
    model: &dyn BandModel,
    kappa: f64,
    gauge_states: &BandMatrix,
    step: f64,
) -> Result<Vec<f64>, SpectralError> {
    let plus = eigensystem(&model.hamiltonian_at(kappa + step))?;
    let minus = eigensystem(&model.hamiltonian_at(kappa - step))?;
    plus.require_nondegenerate(DEGENERACY_TOL)?;
    minus.require_nondegenerate(DEGENERACY_TOL)?;
    let aligned_plus = parallel_transport(gauge_states, &plus)?;
    let aligned_minus = parallel_transport(gauge_states, &minus)?;

    let n = gauge_states.dim();
    let mut out = Vec::with_capacity(n);
    for b in 0..n {
        let up = aligned_plus.states.column(b);
        let um = aligned_minus.states.column(b);
        let du: Vec<Complex64> = up
            .iter()
            .zip(um.iter())
            .map(|(p, m)| (p - m) / Complex64::new(2.0 * step, 0.0))
            .collect();
        let val = Complex64::i() * inner(&gauge_states.column(b), &du);
        debug_assert!(val.im.abs() < 1e-8, "Berry connection should be real");
        out.push(val.re);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandmodel::{DimerChain, DimerChainParams};
    use crate::units::hartree_to_ev;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn random_hermitian(dim: usize, rng: &mut StdRng) -> BandMatrix {
        let mut m = BandMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..dim {
                let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        m
    }

    fn check_eigensystem(h: &BandMatrix, eig: &EigenSystem) {
        let scale = h.frobenius_norm().max(1e-300);
        for b in 0..eig.dim() {
            let v = eig.state(b);
            let hv = h.matvec(&v);
            let resid: f64 = hv
                .iter()
                .zip(v.iter())
                .map(|(x, y)| (x - y * eig.energies[b]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(resid <= 1e-12 * scale, "residual {resid:e} vs scale {scale:e}");
            for a in 0..eig.dim() {
                let ov = inner(&eig.state(a), &v);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ov - expect).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_input_is_trivial() {
        let h = BandMatrix::from_diag(&[-0.76, 0.76]);
        let eig = eigensystem(&h).unwrap();
        assert_eq!(eig.energies, vec![-0.76, 0.76]);
        assert!((eig.states.column(0)[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((eig.states.column(1)[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dimer_zone_center_eigenvalues() {
        let m = DimerChain::default();
        let eig = eigensystem(&m.hamiltonian_at(0.0)).unwrap();
        // Closed-form oracle ±sqrt(Δ²/4 + 4 t_H²).
        let p = m.params;
        let oracle = (p.delta * p.delta / 4.0 + 4.0 * p.t_hop * p.t_hop).sqrt();
        assert!((eig.energies[0] + oracle).abs() < 1e-14);
        assert!((eig.energies[1] - oracle).abs() < 1e-14);
        assert!((hartree_to_ev(oracle) - 3.2501).abs() < 1e-4);
    }

    proptest::proptest! {
        /// Residual and orthonormality invariants for arbitrary 2×2
        /// Hermitian input.
        #[test]
        fn random_2x2_invariants(
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
            cr in -10.0f64..10.0,
            ci in -10.0f64..10.0,
        ) {
            let mut h = BandMatrix::zeros(2);
            h[(0, 0)] = Complex64::new(a, 0.0);
            h[(1, 1)] = Complex64::new(b, 0.0);
            h[(0, 1)] = Complex64::new(cr, ci);
            h[(1, 0)] = Complex64::new(cr, -ci);
            let eig = eigensystem(&h).unwrap();
            check_eigensystem(&h, &eig);
        }

        /// Transporting against a purely phase-rotated copy strips exactly
        /// that phase.
        #[test]
        fn transport_strips_pure_gauge(theta in -3.1f64..3.1, k in 0.01f64..1.0) {
            let m = DimerChain::default();
            let eig = eigensystem(&m.hamiltonian_at(k)).unwrap();
            let mut rotated = eig.clone();
            for b in 0..2 {
                let col: Vec<Complex64> = eig
                    .state(b)
                    .iter()
                    .map(|x| x * Complex64::from_polar(1.0, theta))
                    .collect();
                rotated.states.set_column(b, &col);
            }
            let t = parallel_transport(&eig.states, &rotated).unwrap();
            for b in 0..2 {
                proptest::prop_assert!((t.applied_phase[b] + theta).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_larger_dims_via_jacobi() {
        let mut rng = StdRng::seed_from_u64(11);
        for dim in [3usize, 4, 5] {
            for _ in 0..50 {
                let h = random_hermitian(dim, &mut rng);
                let eig = eigensystem(&h).unwrap();
                check_eigensystem(&h, &eig);
            }
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut h = BandMatrix::zeros(2);
        h[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(eigensystem(&h), Err(SpectralError::NonHermitianInput(_))));
    }

    #[test]
    fn degenerate_flagged() {
        let h = BandMatrix::from_diag(&[0.5, 0.5]);
        let eig = eigensystem(&h).unwrap();
        assert!(eig.require_nondegenerate(DEGENERACY_TOL).is_err());
    }

    #[test]
    fn transport_identity_and_pure_gauge() {
        let m = DimerChain::default();
        let eig = eigensystem(&m.hamiltonian_at(0.2)).unwrap();
        let same = parallel_transport(&eig.states, &eig).unwrap();
        for b in 0..2 {
            assert!(same.applied_phase[b].abs() < 1e-14);
            let diff: f64 = same
                .states
                .column(b)
                .iter()
                .zip(eig.state(b).iter())
                .map(|(a, c)| (a - c).norm_sqr())
                .sum();
            assert!(diff.sqrt() < 1e-14);
        }

        // new = e^{iθ} prev comes back with the phase stripped.
        let theta = 0.83;
        let mut rotated = eig.clone();
        for b in 0..2 {
            let col: Vec<Complex64> = eig
                .state(b)
                .iter()
                .map(|x| x * Complex64::from_polar(1.0, theta))
                .collect();
            rotated.states.set_column(b, &col);
        }
        let t = parallel_transport(&eig.states, &rotated).unwrap();
        for b in 0..2 {
            assert!((t.applied_phase[b] + theta).abs() < 1e-13);
            let diff: f64 = t
                .states
                .column(b)
                .iter()
                .zip(eig.state(b).iter())
                .map(|(a, c)| (a - c).norm_sqr())
                .sum();
            assert!(diff.sqrt() < 1e-13);
        }
    }

    #[test]
    fn transport_along_k_path_real_gauge() {
        // The dimer Hamiltonian is real symmetric, so transported states stay
        // real and every applied phase is 0 or π; the accumulated geometric
        // phase over a path is zero.
        let m = DimerChain::default();
        let n_step = 400;
        let k0 = 0.0;
        let k1 = 2.0 * m.bz_width();
        let mut eig = eigensystem(&m.hamiltonian_at(k0)).unwrap();
        let mut states = eig.states.clone();
        let mut total_phase = [0.0f64; 2];
        for s in 1..=n_step {
            let k = k0 + (k1 - k0) * (s as f64) / (n_step as f64);
            eig = eigensystem(&m.hamiltonian_at(k)).unwrap();
            let t = parallel_transport(&states, &eig).unwrap();
            states = t.states;
            for b in 0..2 {
                total_phase[b] += t.applied_phase[b];
                assert!(
                    t.applied_phase[b].abs() < 1e-10 || (t.applied_phase[b].abs() - PI).abs() < 1e-10
                );
            }
        }
        // One full matrix period: states return to the start exactly.
        let start = eigensystem(&m.hamiltonian_at(k0)).unwrap();
        let closing = parallel_transport(&states, &start).unwrap();
        for b in 0..2 {
            let diff: f64 = closing
                .states
                .column(b)
                .iter()
                .zip(states.column(b).iter())
                .map(|(a, c)| (a - c).norm_sqr())
                .sum();
            assert!(diff.sqrt() < 1e-8);
            assert!(total_phase[b].abs() < 1e-8);
        }
    }

    #[test]
    fn dipole_at_zone_edge_analytic() {
        let m = DimerChain::default();
        let k = PI / m.lattice_constant();
        let d = dipole_elements(&m, k).unwrap();
        let p = m.params;
        let oracle = p.t_hop * p.a_l / p.delta;
        assert!((d[(0, 1)].norm() - oracle).abs() < 1e-12 * oracle);
        // 5.873 Å in lab units.
        assert!((crate::units::bohr_to_angstrom(d[(0, 1)].norm()) - 5.873).abs() < 1e-3);
        // Hermitian structure.
        assert!((d[(1, 0)] - d[(0, 1)].conj()).norm() < 1e-15);
        assert!(d[(0, 0)].norm() == 0.0 && d[(1, 1)].norm() == 0.0);
    }

    #[test]
    fn dipole_matches_fd_overlap_oracle() {
        // |d_ab| from gauge-aligned finite differences i⟨u_a|∂_κ u_b⟩.
        let m = DimerChain::default();
        let a_l = m.lattice_constant();
        let dk = 1e-5 / a_l;
        for i in 0..256 {
            let k = (i as f64 + 0.5) * m.bz_width() / 256.0;
            let eig = eigensystem(&m.hamiltonian_at(k)).unwrap();
            let d = dipole_elements_for(&m, k, &eig).unwrap();
            let plus = parallel_transport(&eig.states, &eigensystem(&m.hamiltonian_at(k + dk)).unwrap()).unwrap();
            let minus = parallel_transport(&eig.states, &eigensystem(&m.hamiltonian_at(k - dk)).unwrap()).unwrap();
            for (a, b) in [(0usize, 1usize), (1, 0)] {
                let du: Vec<Complex64> = plus
                    .states
                    .column(b)
                    .iter()
                    .zip(minus.states.column(b).iter())
                    .map(|(p, q)| (p - q) / Complex64::new(2.0 * dk, 0.0))
                    .collect();
                let fd = (Complex64::i() * inner(&eig.state(a), &du)).norm();
                let hf = d[(a, b)].norm();
                assert!(
                    (fd - hf).abs() <= 1e-5 * hf.max(1e-6),
                    "k={k}: FD {fd:e} vs HF {hf:e}"
                );
            }
        }
    }

    #[test]
    fn berry_connection_vanishes_in_real_gauge() {
        let m = DimerChain::default();
        let step = 1e-6 / m.lattice_constant();
        let mut loop_integral = [0.0f64; 2];
        let n = 128;
        // One matrix period so that the transported gauge closes on itself.
        let dk = 2.0 * m.bz_width() / (n as f64);
        let mut states = eigensystem(&m.hamiltonian_at(0.0)).unwrap().states;
        for i in 0..n {
            let k = (i as f64) * dk;
            if i > 0 {
                let eig = eigensystem(&m.hamiltonian_at(k)).unwrap();
                states = parallel_transport(&states, &eig).unwrap().states;
            }
            let bc = berry_connection(&m, k, &states, step).unwrap();
            for b in 0..2 {
                assert!(bc[b].abs() < 1e-10, "Berry connection {:.3e} at k={}", bc[b], k);
                loop_integral[b] += bc[b] * dk;
            }
        }
        // Zak phase: quantized, and zero for the dimer chain's real gauge.
        for b in 0..2 {
            assert!(loop_integral[b].abs() < 1e-9);
        }
    }

    #[test]
    fn berry_connection_gauge_transformation_law() {
        // Multiplying the gauge states by exp(iφ(κ)) shifts A_b by −φ′(κ).
        let m = DimerChain::default();
        let k = 0.37;
        let step = 1e-6 / m.lattice_constant();
        let slope = 3.2; // φ(κ) = slope·κ  ⇒  A shifts by −slope
        let eig = eigensystem(&m.hamiltonian_at(k)).unwrap();
        let base = berry_connection(&m, k, &eig.states, step).unwrap();

        // Emulate the rotated gauge by tilting the reference states; the FD
        // states are re-aligned against them, which reproduces the law.
        let mut tilted = eig.states.clone();
        for b in 0..2 {
            let col: Vec<Complex64> = eig
                .state(b)
                .iter()
                .map(|x| x * Complex64::from_polar(1.0, slope * k))
                .collect();
            tilted.set_column(b, &col);
        }
        // Tilting by a constant phase leaves the FD derivative along κ
        // unchanged (the law acts through the κ-dependence): emulate the
        // κ-dependence directly instead.
        let plus = eigensystem(&m.hamiltonian_at(k + step)).unwrap();
        let minus = eigensystem(&m.hamiltonian_at(k - step)).unwrap();
        let tp = parallel_transport(&eig.states, &plus).unwrap();
        let tm = parallel_transport(&eig.states, &minus).unwrap();
        for b in 0..2 {
            let up: Vec<Complex64> = tp
                .states
                .column(b)
                .iter()
                .map(|x| x * Complex64::from_polar(1.0, slope * (k + step)))
                .collect();
            let um: Vec<Complex64> = tm
                .states
                .column(b)
                .iter()
                .map(|x| x * Complex64::from_polar(1.0, slope * (k - step)))
                .collect();
            let u0: Vec<Complex64> = eig
                .state(b)
                .iter()
                .map(|x| x * Complex64::from_polar(1.0, slope * k))
                .collect();
            let du: Vec<Complex64> = up
                .iter()
                .zip(um.iter())
                .map(|(p, q)| (p - q) / Complex64::new(2.0 * step, 0.0))
                .collect();
            let bc = (Complex64::i() * inner(&u0, &du)).re;
            assert!(((bc - base[b]) + slope).abs() < 1e-6, "law violated: {bc} vs {}", base[b]);
        }
    }

    #[test]
    fn transport_handles_band_permutation() {
        // Swapped columns are matched back by maximum overlap.
        let prev = BandMatrix::identity(2);
        let mut swapped = BandMatrix::zeros(2);
        swapped[(1, 0)] = Complex64::new(1.0, 0.0);
        swapped[(0, 1)] = Complex64::new(1.0, 0.0);
        let eig = EigenSystem { energies: vec![-1.0, 1.0], states: swapped };
        let t = parallel_transport(&prev, &eig).unwrap();
        assert_eq!(t.energies, vec![1.0, -1.0]);
        assert!((t.states.column(0)[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn transport_rejects_overlap_below_half() {
        // A previous state orthogonal to every candidate cannot be matched.
        let prev = BandMatrix::identity(3);
        let mut bad = BandMatrix::zeros(3);
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        bad[(1, 0)] = Complex64::new(1.0, 0.0); // e2
        bad[(2, 1)] = Complex64::new(1.0, 0.0); // e3
        bad[(1, 2)] = s; // (e2+e3)/√2
        bad[(2, 2)] = s;
        let eig = EigenSystem { energies: vec![0.0, 1.0, 2.0], states: bad };
        assert!(matches!(
            parallel_transport(&prev, &eig),
            Err(SpectralError::BandMatchingFailure(_))
        ));
        let _ = DimerChainParams::default();
    }
}
