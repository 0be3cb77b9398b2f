//! Singlet-T0 initialization by a detuning ramp with an optimized jump, then
//! the reversed ramp for readout, both under white detuning noise.

use spinbus::gatesim::*;
use spinbus::physcore::*;

fn main() -> spinbus::Result<()> {
    let units = UnitSystem::default();
    let mut model = InitReadoutModel::from_fields(&units, 20.0, 1.0, 0.3);
    let ramp = InitRamp::for_model(&model, 200.0);
    let (ramp, noiseless) = optimize_jump(&model, &ramp, 24, 80)?;
    println!("jump window {:?}, noiseless fidelity {noiseless:.5}", ramp.jump);

    model.noise.white_psd = psd_from_asd_per_sqrt_hz(0.02e-3);
    let init = simulate_init(&model, &ramp, 500, SeedSpec::new(1))?;
    let readout = simulate_readout(&model, &ramp, 500, SeedSpec::new(2))?;
    println!("init    F = {:.5} ± {:.1e}", init.fidelity, init.stderr);
    println!("readout F = {:.5} ± {:.1e}", readout.fidelity, readout.stderr);
    Ok(())
}
