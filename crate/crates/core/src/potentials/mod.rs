//! Time-dependent electrostatic confinement of conveyor-mode shuttle devices.
//!
//! Gates are modelled as equipotential patches in the surface plane above the
//! 2DEG (pinned-surface model). The potential a distance `depth` below a patch
//! held at 1 V, with the rest of the surface grounded, is the solid angle the
//! patch subtends divided by 2π. Everything downstream is linear in the gate
//! voltages, so device potentials are superpositions of per-binding basis
//! potentials.

mod device;
mod gates;
mod layout;
mod orbital;
mod tracking;
mod waveform;

pub use device::DeviceModel;
pub use gates::{
    basis_by_binding, compose_potential, gate_basis_potential, rectangle_potential, BasisPotential, Binding, GateSpec,
    Grid2, PotentialField,
};
pub use layout::{DeviceDefaults, DeviceLayout, LayoutKind};
pub use orbital::{harmonic_estimate, orbital_splitting, OrbitalOptions, OrbitalSplitting};
pub use tracking::{track_dot_minimum, TrackOptions, TrackPoint};
pub use waveform::{
    approach_program, corner_shuttle_program, phase_offset, shuttle_voltages, straight_program, CornerProgramSpec,
    PhaseSegment, PhaseTrajectory, RampShape, WaveformProgram,
};
