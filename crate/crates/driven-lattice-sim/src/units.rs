//! Unit conversions between I/O units and the internal Hartree atomic units.
//!
//! Everything inside the crate runs in Hartree atomic units (ħ = e = m_e = 1),
//! which removes all ħ/e bookkeeping from the equations of motion. The
//! conversion constants below (CODATA 2018) are the single place where
//! laboratory units enter:
//!
//! | quantity       | I/O unit | atomic unit              |
//! |----------------|----------|--------------------------|
//! | energy         | eV       | Hartree                  |
//! | length         | Å        | Bohr radius              |
//! | time           | fs       | ħ/Hartree ≈ 24.189 as    |
//! | electric field | V/m      | Hartree/(e·Bohr)         |

/// Hartree energy in electronvolts.
pub const HARTREE_EV: f64 = 27.211_386_245_988;

/// Bohr radius in ångström.
pub const BOHR_ANGSTROM: f64 = 0.529_177_210_903;

/// Atomic unit of time in femtoseconds.
pub const ATOMIC_TIME_FS: f64 = 2.418_884_326_585_7e-2;

/// Atomic unit of electric field in volts per meter.
pub const ATOMIC_FIELD_V_PER_M: f64 = 5.142_206_747_63e11;

pub fn ev_to_hartree(e: f64) -> f64 {
    e / HARTREE_EV
}

pub fn hartree_to_ev(e: f64) -> f64 {
    e * HARTREE_EV
}

pub fn angstrom_to_bohr(x: f64) -> f64 {
    x / BOHR_ANGSTROM
}

pub fn bohr_to_angstrom(x: f64) -> f64 {
    x * BOHR_ANGSTROM
}

pub fn fs_to_au(t: f64) -> f64 {
    t / ATOMIC_TIME_FS
}

pub fn au_to_fs(t: f64) -> f64 {
    t * ATOMIC_TIME_FS
}

pub fn v_per_m_to_au(f: f64) -> f64 {
    f / ATOMIC_FIELD_V_PER_M
}

/// 1 MV/cm = 1e8 V/m.
pub fn mv_per_cm_to_au(f: f64) -> f64 {
    v_per_m_to_au(f * 1.0e8)
}
