//! Simulation and tomography of a two-mode (polarization) click detector,
//! together with an entanglement measure of the measurement itself.
//!
//! The crate models a detector made of a half-wave plate, a polarizing beam
//! splitter, a tunable loss in one arm and two on/off single-photon detectors
//! whose outputs are OR-ed into a single click signal. It provides:
//!
//! * [`fock`] is the truncated two-mode Fock-space linear algebra (bases,
//!   coherent states, tensor operations, Hermitian spectral tools),
//! * [`optics`] covers Jones calculus for the probe-preparation wave plates
//!   and the physical detector model producing theory POVMs,
//! * [`probes`] builds coherent-state probe sets, the minimal phase-grid set
//!   and the 19-state experimental set, plus conditioning diagnostics,
//! * [`tomography`] holds Monte Carlo count simulation, the constrained
//!   least-squares POVM reconstruction and an independent sequential
//!   (phase-peeling) analytical solver, with bootstrap error bars,
//! * [`entanglement`] computes logarithmic negativity, the entanglement
//!   measure of a POVM element, swap-equivalence checks and loss sweeps,
//! * [`cli`] is the `entlab` command line front end.
//!
//! Start with the runnable examples (`cargo run --release --example ...`);
//! each one demonstrates a single capability end to end.

pub mod cli;
pub mod entanglement;
mod error;
pub mod fock;
pub mod optics;
pub mod probes;
pub mod tomography;

pub use error::Error;

/// Complex scalar used throughout the crate.
pub type Complex64 = num_complex::Complex<f64>;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
