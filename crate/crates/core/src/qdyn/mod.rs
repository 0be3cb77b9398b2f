//! Small-Hilbert-space dynamics: piecewise-constant propagation, noise Monte
//! Carlo, leakage-aware process fidelity and a bounded Nelder-Mead tuner.
//!
//! Energies are μeV and times ns throughout; a Hamiltonian step `H` over `Δt`
//! contributes `exp(−i·H·Δt/ħ)`.

mod fidelity;
mod montecarlo;
mod optimize;
mod propagate;

pub use fidelity::{process_fidelity_with_leakage, Subspace};
pub use montecarlo::{
    monte_carlo_fidelity, monte_carlo_map, FidelityReport, NoiseChannel, NoiseDraw, NoiseKind, ShotStats,
};
pub use optimize::{optimize_pulse, OptimizeOptions, OptimizeResult};
pub use propagate::{
    expm_hermitian, pauli, propagate, propagate_state, CMat, HamiltonianModel, PropagateOptions, Pulse,
};
