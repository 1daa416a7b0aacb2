//! Driving-field waveforms: paired vector potential A(t) and electric field
//! E(t) with E = −dA/dt enforced analytically.
//!
//! Both shipped waveforms are coded with closed-form E rather than numeric
//! differentiation so the propagators see smooth right-hand sides; the
//! E = −dA/dt identity is checked by a finite-difference oracle in the tests.

/// A waveform supplies A(t) and E(t) in atomic units. Outside
/// [`Waveform::support`] the vector potential is constant and E = 0.
pub trait Waveform: Sync {
    fn a_at(&self, t: f64) -> f64;
    fn e_at(&self, t: f64) -> f64;
    /// Interval [t_start, t_end] outside which E vanishes.
    fn support(&self) -> (f64, f64);
}

/// Smooth ramp to a static field: A rises as a cubic-quartic polynomial over
/// the rise time and then decreases linearly, so E settles to the constant
/// E_dc after t = T_dc. A and dA/dt are continuous at both seams.
#[derive(Clone, Copy, Debug)]
pub struct StaticRamp {
    /// Field strength after the ramp (atomic units).
    pub e_dc: f64,
    /// Rise time (atomic units).
    pub t_dc: f64,
}

impl Waveform for StaticRamp {
    fn a_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else if t <= self.t_dc {
            let x = t / self.t_dc;
            -self.e_dc * self.t_dc * (x.powi(3) - 0.5 * x.powi(4))
        } else {
            -self.e_dc * (t - self.t_dc) - 0.5 * self.e_dc * self.t_dc
        }
    }

    fn e_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else if t <= self.t_dc {
            let x = t / self.t_dc;
            self.e_dc * (3.0 * x * x - 2.0 * x.powi(3))
        } else {
            self.e_dc
        }
    }

    fn support(&self) -> (f64, f64) {
        // E stays on indefinitely once ramped.
        (0.0, f64::INFINITY)
    }
}

/// cos⁴-envelope pulse,
/// A(t) = −(E₀/ω₀) sin[ω₀(t − T/2)] cos⁴[π(t − T/2)/T] on [0, T], zero outside.
///
/// A vanishes identically at both endpoints, so the pulse carries no DC
/// offset; E is the exact negative time derivative.
#[derive(Clone, Copy, Debug)]
pub struct Pulse {
    /// Peak field strength (atomic units).
    pub e_0: f64,
    /// Carrier angular frequency (atomic units).
    pub omega_0: f64,
    /// Full pulse duration (atomic units).
    pub t_pulse: f64,
}

impl Waveform for Pulse {
    fn a_at(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.t_pulse {
            return 0.0;
        }
        let tau = t - 0.5 * self.t_pulse;
        let env = (std::f64::consts::PI * tau / self.t_pulse).cos().powi(4);
        -(self.e_0 / self.omega_0) * (self.omega_0 * tau).sin() * env
    }

    fn e_at(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.t_pulse {
            return 0.0;
        }
        let tau = t - 0.5 * self.t_pulse;
        let phase = std::f64::consts::PI * tau / self.t_pulse;
        let c = phase.cos();
        let carrier = (self.omega_0 * tau).sin();
        // E = −dA/dt, product rule over carrier and cos⁴ envelope.
        self.e_0 * (self.omega_0 * tau).cos() * c.powi(4)
            - (self.e_0 / self.omega_0) * (4.0 * std::f64::consts::PI / self.t_pulse)
                * carrier
                * c.powi(3)
                * phase.sin()
    }

    fn support(&self) -> (f64, f64) {
        (0.0, self.t_pulse)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{fs_to_au, mv_per_cm_to_au, v_per_m_to_au};

    fn ramp() -> StaticRamp {
        StaticRamp { e_dc: v_per_m_to_au(1.0), t_dc: fs_to_au(20.0) }
    }

    fn pulse() -> Pulse {
        Pulse {
            e_0: mv_per_cm_to_au(1.0),
            omega_0: crate::units::ev_to_hartree(0.1),
            t_pulse: fs_to_au(100.0),
        }
    }

    /// E = −dA/dt by central differences, away from piecewise seams.
    fn check_fd_consistency(w: &dyn Waveform, t0: f64, t1: f64, seams: &[f64]) {
        let n = 2000;
        let h = (t1 - t0) / 1.0e7;
        for i in 0..n {
            let t = t0 + (t1 - t0) * (i as f64 + 0.5) / (n as f64);
            if seams.iter().any(|s| (t - s).abs() < 2.0 * h) {
                continue;
            }
            let fd = -(w.a_at(t + h) - w.a_at(t - h)) / (2.0 * h);
            let e = w.e_at(t);
            let scale = e.abs().max(w.e_at(0.5 * (t0 + t1)).abs()).max(1e-300);
            assert!(
                (fd - e).abs() <= 1e-7 * scale.max(fd.abs()),
                "E ≠ −dA/dt at t = {t}: fd {fd:e} vs analytic {e:e}"
            );
        }
    }

    #[test]
    fn ramp_pointwise_values() {
        let w = ramp();
        assert_eq!(w.a_at(-1.0), 0.0);
        assert!((w.a_at(w.t_dc) + 0.5 * w.e_dc * w.t_dc).abs() < 1e-25);
        assert!((w.a_at(2.0 * w.t_dc) + 1.5 * w.e_dc * w.t_dc).abs() < 1e-25);
        assert!((w.e_at(0.5 * w.t_dc) - 0.5 * w.e_dc).abs() < 1e-25);
        assert_eq!(w.e_at(w.t_dc * 1.0001), w.e_dc);
        assert_eq!(w.e_at(-0.1), 0.0);
    }

    #[test]
    fn ramp_e_matches_fd_of_a() {
        let w = ramp();
        check_fd_consistency(&w, -10.0, 3.0 * w.t_dc, &[0.0, w.t_dc]);
    }

    #[test]
    fn ramp_a_and_slope_continuous_at_seams() {
        let w = ramp();
        let eps = 1e-9 * w.t_dc;
        for s in [0.0, w.t_dc] {
            // A moves by at most |E|·2ε across a seam; dA/dt (i.e. E) is
            // continuous there as well.
            assert!((w.a_at(s + eps) - w.a_at(s - eps)).abs() <= 2.1 * eps * w.e_dc);
            assert!((w.e_at(s + eps) - w.e_at(s - eps)).abs() < 1e-8 * w.e_dc.max(1e-300));
        }
    }

    #[test]
    fn pulse_pointwise_values() {
        let w = pulse();
        assert_eq!(w.a_at(0.0), 0.0);
        assert!(w.a_at(w.t_pulse).abs() < 1e-14);
        assert!(w.a_at(0.5 * w.t_pulse).abs() < 1e-20);
        assert!((w.e_at(0.5 * w.t_pulse) - w.e_0).abs() < 1e-15 * w.e_0);
        assert_eq!(w.a_at(w.t_pulse + 0.1), 0.0);
        assert_eq!(w.e_at(-0.1), 0.0);
    }

    #[test]
    fn pulse_e_matches_fd_of_a() {
        let w = pulse();
        check_fd_consistency(&w, 0.0, w.t_pulse, &[0.0, w.t_pulse]);
    }

    #[test]
    fn pulse_amplitude_bound() {
        let w = pulse();
        let bound = w.e_0 / w.omega_0;
        for i in 0..20000 {
            let t = w.t_pulse * (i as f64) / 20000.0;
            assert!(w.a_at(t).abs() <= bound * (1.0 + 1e-12));
        }
    }

    proptest::proptest! {
        /// E = −dA/dt at arbitrary interior times for both waveforms.
        #[test]
        fn derivative_identity_everywhere(frac in 0.001f64..0.999) {
            let r = ramp();
            let t = frac * 2.5 * r.t_dc;
            if (t - r.t_dc).abs() > 1e-3 * r.t_dc && t > 1e-3 * r.t_dc {
                let h = r.t_dc * 1e-7;
                let fd = -(r.a_at(t + h) - r.a_at(t - h)) / (2.0 * h);
                proptest::prop_assert!((fd - r.e_at(t)).abs() <= 1e-7 * r.e_dc);
            }
            let p = pulse();
            let tp = frac * p.t_pulse;
            if tp > 1e-3 * p.t_pulse && tp < 0.999 * p.t_pulse {
                let h = p.t_pulse * 1e-8;
                let fd = -(p.a_at(tp + h) - p.a_at(tp - h)) / (2.0 * h);
                proptest::prop_assert!((fd - p.e_at(tp)).abs() <= 1e-6 * p.e_0);
            }
        }
    }
}
