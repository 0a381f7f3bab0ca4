//! Low-density-limit dynamics of a quantum test particle in a dilute Bose gas.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the discretised physical input: system spectrum and
//!   coupling, energy grid, form factors, gas state and the causal spectral
//!   functions `γ_{nm}(E)`.
//! * [`scattering`] builds `T₀`, `T₁`, `R_{m,n}` and the per-bin one-particle
//!   S-matrix, and exposes `Θ(X) = S⁺XS − X`.
//! * [`generator`] assembles the Markovian generator (Heisenberg and
//!   Schrödinger forms), the T-matrix driven Boltzmann generator, and the
//!   Lindblad-structure checks.
//! * [`collision`] realises `dU = dN(S − 1)U` as a Poisson collision model.
//! * [`wick`] computes exact finite-fugacity correlators of the rescaled
//!   number operators and their low-density limits.
//! * [`fock`] is a truncated bosonic Fock-space oracle for the number
//!   process identities.

pub mod collision;
pub mod error;
pub mod fock;
pub mod generator;
pub mod linalg;
pub mod model;
pub mod random;
pub mod scattering;
pub mod wick;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
