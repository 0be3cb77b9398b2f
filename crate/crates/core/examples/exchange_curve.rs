//! Exchange coupling J(d) of two dots pushed together in the manipulation
//! zone, from a two-electron solve per frame, with an exponential fit.

use spinbus::exchange::*;
use spinbus::gatesim::DEFAULT_J_HOLD;

fn main() -> spinbus::Result<()> {
    let spec = ApproachSpec::default();
    let times = spec.frame_times(78.0, 85.5, 6);
    let curve = spec.curve(&times, &TwoElectronParams::default())?;
    println!("{:>8} {:>12}", "d (nm)", "J (ueV)");
    for p in &curve.points {
        println!("{:8.2} {:12.4e}", p.d, p.j);
    }
    let f = curve.fit;
    println!("fit J = {:.3e}·exp(-(d - {:.1})/{:.2}), R² = {:.3}", f.j_ref, f.d_ref, f.decay, f.r_squared);
    if let Some(d) = curve.hold_distance(DEFAULT_J_HOLD) {
        println!("J = {DEFAULT_J_HOLD} ueV reached at d = {d:.1} nm");
    }
    Ok(())
}
