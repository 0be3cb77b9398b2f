//! Desk-scale simulation suite for a shuttling-based spin-qubit processor.
//!
//! The crate covers the whole chain from gate layouts to surface-code cycles:
//!
//! - [`potentials`]: electrostatic potentials of conveyor-mode shuttle lanes,
//!   T-junctions and manipulation zones, dot tracking and orbital splitting.
//! - [`magnetics`]: stray fields of uniformly magnetized cuboid micromagnets.
//! - [`qdyn`]: piecewise-constant Schrödinger propagation, noise Monte Carlo,
//!   leakage-aware fidelities and a Nelder-Mead pulse tuner.
//! - [`gatesim`]: initialization/readout, shuttling-EDSR, exchange CZ, CNOT
//!   synthesis and valley-yield studies.
//! - [`exchange`]: two-electron 1D solver giving J(d).
//! - [`archsched`]: unit-cell grid, stabilizer scheduling and wiring budget.
//! - [`runner`]: config-driven experiment runner behind the `spinbus` binary.

pub mod archsched;
pub mod eigen;
pub mod error;
pub mod exchange;
pub mod gatesim;
pub mod magnetics;
pub mod physcore;
pub mod potentials;
pub mod qdyn;
pub mod runner;

pub use error::{Error, Result};
pub use physcore::{SeedSpec, UnitSystem};
