use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cz::{best_cz_phases, cz_block, cz_blocks, DistancePulse, TwoQubitModel};
use super::edsr::{calibrate_edsr, edsr_blocks, xy_rotation, EdsrDrive, EdsrNoise, Envelope, SingleQubitModel};
use crate::physcore::{derive_stream, SeedSpec};
use crate::qdyn::{process_fidelity_with_leakage, CMat, FidelityReport, Subspace};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateOp {
    /// Rotation of qubit `qubit` (0 = control, 1 = target) by `angle` about
    /// the xy-plane axis at `axis`.
    Rotation {
        qubit: usize,
        angle: f64,
        axis: f64,
    },
    /// Frame update exp(−iθσz/2), applied in software.
    VirtualZ {
        qubit: usize,
        angle: f64,
    },
    Cz,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnotSynthesis {
    /// Gates in time order.
    pub circuit: Vec<GateOp>,
    /// ‖U_circuit − e^{iφ}·CNOT‖ minimized over the global phase.
    pub unitary_error: f64,
    /// 1 − Σ constituent infidelities.
    pub composite_fidelity: f64,
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// CNOT with qubit 0 (first tensor factor) as control, basis |↑↑⟩…|↓↓⟩ with ↑ = |0⟩.
pub fn cnot_matrix() -> CMat {
    let mut m = CMat::zeros(4, 4);
    for (a, b) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(a, b)] = c(1.0);
    }
    m
}

fn embed(qubit: usize, g: &CMat) -> CMat {
    let id = CMat::identity(2, 2);
    if qubit == 0 {
        g.kronecker(&id)
    } else {
        id.kronecker(g)
    }
}

fn rz(angle: f64) -> CMat {
    let mut m = CMat::zeros(2, 2);
    m[(0, 0)] = Complex64::from_polar(1.0, -0.5 * angle);
    m[(1, 1)] = Complex64::from_polar(1.0, 0.5 * angle);
    m
}

/// Ideal unitary of a circuit.
pub fn circuit_unitary(circuit: &[GateOp]) -> CMat {
    let mut u = CMat::identity(4, 4);
    for op in circuit {
        let g = match *op {
            GateOp::Rotation { qubit, angle, axis } => embed(qubit, &xy_rotation(angle, axis)),
            GateOp::VirtualZ { qubit, angle } => embed(qubit, &rz(angle)),
            GateOp::Cz => {
                let mut m = CMat::identity(4, 4);
                m[(3, 3)] = c(-1.0);
                m
            }
        };
        u = g * u;
    }
    u
}

fn phase_free_distance(a: &CMat, b: &CMat) -> f64 {
    let ov = (b.adjoint() * a).trace();
    let ph = if ov.norm() > 0.0 { ov / ov.norm() } else { c(1.0) };
    (a - b * ph).norm()
}

/// CNOT from CZ with Hadamard-like rotations on the target, in time order
/// Ry(−π/2), CZ, Ry(π/2). In the returned circuit `Cz` is the calibrated
/// CZ-class gate whose local phases `cz_phases` (α, β) are undone by virtual
/// z rotations; `unitary_error` checks the frame-free ideal circuit.
pub fn synthesize_cnot(cz: &FidelityReport, single_qubit: &[FidelityReport], cz_phases: [f64; 2]) -> CnotSynthesis {
    let half = std::f64::consts::FRAC_PI_2;
    let circuit = vec![
        GateOp::Rotation { qubit: 1, angle: half, axis: -half },
        GateOp::Cz,
        GateOp::Rotation { qubit: 1, angle: half, axis: half },
    ];
    let unitary_error = phase_free_distance(&circuit_unitary(&circuit), &cnot_matrix());
    let mut with_frames = circuit.clone();
    // a physical CZ-class gate is (Rz(−2α) ⊗ Rz(−2β))·CZ; undo it in software
    with_frames.insert(2, GateOp::VirtualZ { qubit: 0, angle: 2.0 * cz_phases[0] });
    with_frames.insert(3, GateOp::VirtualZ { qubit: 1, angle: 2.0 * cz_phases[1] });
    let infid: f64 = single_qubit.iter().map(|r| 1.0 - r.fidelity).sum::<f64>() + (1.0 - cz.fidelity);
    CnotSynthesis { circuit: with_frames, unitary_error, composite_fidelity: 1.0 - infid }
}

/// Result of simulating the CNOT sequence from noisy constituent blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnotSequenceReport {
    pub sequence: FidelityReport,
    pub synthesis: CnotSynthesis,
    pub constituents: Vec<FidelityReport>,
}

/// Calibrate the two target rotations and the CZ, then compare the additive
/// composite estimate with the fidelity of the composed noisy blocks (shot
/// `k` uses independent noise for each constituent).
#[allow(clippy::too_many_arguments)]
pub fn simulate_cnot_sequence(
    two: &TwoQubitModel,
    pulse: &DistancePulse,
    target: &SingleQubitModel,
    amplitude: f64,
    noise: &EdsrNoise,
    shots: usize,
    seed: SeedSpec,
) -> Result<CnotSequenceReport> {
    let half = std::f64::consts::FRAC_PI_2;
    let mut drives = Vec::new();
    for phase in [0.0, std::f64::consts::PI] {
        let start = EdsrDrive { phase, ..EdsrDrive::resonant(target, half, amplitude, Envelope::Hann)? };
        drives.push(calibrate_edsr(target, &start, half, 60)?.0);
    }
    let (block, _) = cz_block(two, pulse)?;
    let ((a, b), _) = best_cz_phases(&block)?;
    let cz_target = super::cz::cz_class_target(a, b);
    let id4 = Subspace::from_indices(4, &[0, 1, 2, 3])?;

    let s = |k: u64| derive_stream(seed, k);
    let r1 = edsr_blocks(target, &drives[0], noise, shots, s(1))?;
    let r2 = edsr_blocks(target, &drives[1], noise, shots, s(2))?;
    let czs = cz_blocks(two, pulse, shots, s(3))?;
    let frames = embed(0, &rz(2.0 * a)) * embed(1, &rz(2.0 * b));
    let id2 = CMat::identity(2, 2);
    let values: Vec<(f64, f64)> = (0..shots)
        .map(|k| {
            let u = id2.kronecker(&r2[k]) * &frames * &czs[k] * id2.kronecker(&r1[k]);
            process_fidelity_with_leakage(&u, &cnot_matrix(), &id4)
        })
        .collect::<Result<_>>()?;
    let sequence = FidelityReport::from_shots(&values, seed, false);

    let two_sub = Subspace::from_indices(2, &[0, 1])?;
    let score = |blocks: &[CMat], t: &CMat, sub: &Subspace| -> Result<FidelityReport> {
        let v: Vec<(f64, f64)> =
            blocks.iter().map(|m| process_fidelity_with_leakage(m, t, sub)).collect::<Result<_>>()?;
        Ok(FidelityReport::from_shots(&v, seed, false))
    };
    let f1 = score(&r1, &xy_rotation(half, drives[0].axis_angle()), &two_sub)?;
    let f2 = score(&r2, &xy_rotation(half, drives[1].axis_angle()), &two_sub)?;
    let fcz = score(&czs, &cz_target, &id4)?;
    let synthesis = synthesize_cnot(&fcz, &[f1.clone(), f2.clone()], [a, b]);
    Ok(CnotSequenceReport { sequence, synthesis, constituents: vec![f1, fcz, f2] })
}
