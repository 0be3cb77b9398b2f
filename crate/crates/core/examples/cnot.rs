//! CNOT from target rotations around an exchange CZ: exact synthesis check and
//! a noisy sequence compared with the additive composite estimate.

use num_complex::Complex64;
use spinbus::gatesim::*;
use spinbus::physcore::*;

fn main() -> spinbus::Result<()> {
    let two = TwoQubitModel::manipulation_zone(30.0);
    let (pulse, _) = optimize_hold(&two, &DistancePulse::for_hold(&two, DEFAULT_J_HOLD)?, 0.2)?;
    let units = UnitSystem::default();
    let target =
        SingleQubitModel::uniform(SpinField::linear_mt(&units, 20.0, 0.0, 0.0, 0.075), Complex64::new(50.0, 0.0), 0.0);
    let noise = EdsrNoise { position_psd: psd_from_asd_per_sqrt_hz(1e-7), ..Default::default() };
    let r = simulate_cnot_sequence(&two, &pulse, &target, 10.0, &noise, 50, SeedSpec::new(9))?;
    for (name, c) in ["Ry(-π/2)", "CZ", "Ry(+π/2)"].iter().zip(&r.constituents) {
        println!("{name:>9}: F = {:.6}", c.fidelity);
    }
    println!("circuit unitary error {:.1e}", r.synthesis.unitary_error);
    println!("sequence F = {:.6}, composite estimate {:.6}", r.sequence.fidelity, r.synthesis.composite_fidelity);
    Ok(())
}
