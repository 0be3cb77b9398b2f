//! Gate-level models of the architecture: Pauli-spin-blockade initialization
//! and readout, shuttling-mode EDSR single-qubit gates, exchange CZ, CNOT
//! synthesis and valley-splitting yield.

mod cnot;
mod cz;
mod edsr;
mod init;
mod valley;
mod yield_study;

pub use cnot::{
    circuit_unitary, cnot_matrix, simulate_cnot_sequence, synthesize_cnot, CnotSequenceReport, CnotSynthesis, GateOp,
};
pub use cz::{
    best_cz_phases, cz_block, cz_blocks, cz_class_target, local_invariants, optimize_hold, pi_hold_time, simulate_cz,
    CzReport, DistancePulse, ExchangeLaw, TwoQubitModel, DEFAULT_J_HOLD,
};
pub use edsr::{
    calibrate_edsr, edsr_blocks, edsr_propagator, measure_rabi_frequency, simulate_edsr, xy_rotation, EdsrDrive,
    EdsrNoise, Envelope, SingleQubitModel, SpinField, DEFAULT_KAPPA,
};
pub use init::{
    j_of_epsilon, optimize_jump, simulate_init, simulate_readout, InitNoise, InitRamp, InitReadoutModel, JumpWindow,
};
pub use valley::{component_sigma, sample_valley_field, ValleyField};
pub use yield_study::{calibrated_fidelity, valley_yield, wilson_interval, YieldOptions, YieldReport};
