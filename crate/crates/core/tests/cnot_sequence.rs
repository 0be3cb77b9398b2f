//! CNOT built from target rotations around a CZ-class exchange gate.

use num_complex::Complex64;
use proptest::prelude::*;
use spinbus::gatesim::*;
use spinbus::physcore::*;
use spinbus::qdyn::{CMat, FidelityReport};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// |0⟩⟨0| ⊗ 1 + |1⟩⟨1| ⊗ X with the control as the first factor.
fn cnot_oracle() -> CMat {
    let p0 = CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
    let p1 = CMat::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
    let x = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    p0.kronecker(&CMat::identity(2, 2)) + p1.kronecker(&x)
}

/// diag(e^{-iθ/2}, e^{iθ/2}).
fn rz(theta: f64) -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::from_polar(1.0, theta / 2.0),
    ]))
}

/// Overlap |Tr(A†B)|/4, equal to 1 when A and B agree up to a global phase.
fn phase_free_overlap(a: &CMat, b: &CMat) -> f64 {
    (a.adjoint() * b).trace().norm() / 4.0
}

fn ideal_report() -> FidelityReport {
    FidelityReport { fidelity: 1.0, leakage: 0.0, stderr: 0.0, shots: 1, seed: SeedSpec::new(0), per_shot: None }
}

#[test]
fn ideal_circuit_is_cnot() {
    let r = ideal_report();
    let s = synthesize_cnot(&r, &[r.clone(), r.clone()], [0.0, 0.0]);
    let u = circuit_unitary(&s.circuit);
    assert!((phase_free_overlap(&u, &cnot_oracle()) - 1.0).abs() < 1e-12);
    assert!(s.unitary_error < 1e-12);
    assert_eq!(s.composite_fidelity, 1.0);
}

proptest! {
    #[test]
    fn virtual_frames_undo_local_cz_phases(alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let r = ideal_report();
        let s = synthesize_cnot(&r, &[r.clone(), r.clone()], [alpha, beta]);
        let pos = s.circuit.iter().position(|op| matches!(op, GateOp::Cz)).unwrap();
        let mut cz = CMat::identity(4, 4);
        cz[(3, 3)] = c(-1.0);
        let physical = rz(-2.0 * alpha).kronecker(&rz(-2.0 * beta)) * cz;
        let u = circuit_unitary(&s.circuit[pos + 1..]) * physical * circuit_unitary(&s.circuit[..pos]);
        prop_assert!((phase_free_overlap(&u, &cnot_oracle()) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn noisy_sequence_tracks_composite_estimate() {
    let two = TwoQubitModel::manipulation_zone(30.0);
    let (pulse, _) = optimize_hold(&two, &DistancePulse::for_hold(&two, DEFAULT_J_HOLD).unwrap(), 0.2).unwrap();
    let units = UnitSystem::default();
    let field = SpinField::linear_mt(&units, 20.0, 0.0, 0.0, 0.075);
    let target = SingleQubitModel::uniform(field, c(50.0), 0.0);
    let noise = EdsrNoise { position_psd: psd_from_asd_per_sqrt_hz(1e-7), ..Default::default() };
    let r = simulate_cnot_sequence(&two, &pulse, &target, 10.0, &noise, 100, SeedSpec::new(9)).unwrap();
    let seq = 1.0 - r.sequence.fidelity;
    let est = 1.0 - r.synthesis.composite_fidelity;
    assert!(est > 0.0);
    assert!((seq - est).abs() <= 0.2 * est, "sequence infidelity {seq:.3e} vs composite {est:.3e}");
    assert_eq!(r.constituents.len(), 3);
}
