//! Exchange CZ in the manipulation zone: distance pulse, hold-time
//! optimization, local invariants and Monte Carlo fidelity.

use spinbus::gatesim::*;
use spinbus::physcore::SeedSpec;

fn main() -> spinbus::Result<()> {
    let model = TwoQubitModel::manipulation_zone(30.0);
    let pulse = DistancePulse::for_hold(&model, DEFAULT_J_HOLD)?;
    println!("d_far {:.1} nm -> d_hold {:.1} nm, πħ/J = {:.1} ns", pulse.d_far, pulse.d_hold, pulse.hold);
    let (best, f0) = optimize_hold(&model, &pulse, 0.2)?;
    println!(
        "optimal hold {:.2} ns ({:+.2}%), noiseless F = {f0:.6}",
        best.hold,
        (best.hold / pulse.hold - 1.0) * 100.0
    );
    let r = simulate_cz(&model, &best, 300, SeedSpec::new(3))?;
    println!("G1 = ({:.1e}, {:.1e}), G2 = {:.5}", r.g1[0], r.g1[1], r.g2);
    println!("Monte Carlo F = {:.6} ± {:.1e}", r.report.fidelity, r.report.stderr);
    Ok(())
}
