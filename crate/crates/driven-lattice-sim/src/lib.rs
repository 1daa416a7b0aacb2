//! Field-driven electron dynamics in one-dimensional periodic lattice models.
//!
//! The crate propagates two-band (and, through the [`bandmodel::BandModel`]
//! contract, n-band) lattice electrons under homogeneous driving fields and
//! analyzes the dynamics through three reference bases:
//!
//! * **Bloch** — eigenstates of the field-free Hamiltonian,
//! * **Houston** — instantaneous eigenstates at the shifted wavevector
//!   k + A(t), dressed with dynamical and geometric phases,
//! * **polarized Houston** — eigenstates of the length-gauge effective
//!   Hamiltonian including the field–dipole coupling, which fold field-induced
//!   polarization (Stark-type) effects into the basis.
//!
//! Propagators cover the unitary Schrödinger equation, a quantum master
//! equation with a relaxation-time dissipator built on any of the three bases,
//! and the semiconductor Bloch equations as an independent cross-check route.
//! The `sim` binary exposes preset scenarios and writes CSV time series.
//!
//! Internally everything runs in Hartree atomic units (see [`units`]).

pub mod bandmodel;
pub mod bases;
pub mod dynamics;
pub mod fields;
pub mod observables;
pub mod scenarios;
pub mod spectral;
pub mod units;

// The book chapters double as doctests so the guide can never drift from the
// API; `cargo test` compiles and runs every Rust snippet in book/src.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/bases.md")]
    mod bases {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/observables.md")]
    mod observables {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
