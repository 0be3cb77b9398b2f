//! Stray-field gradients of the single-qubit-gate and IR-zone micromagnets
//! along the shuttle channel.

use spinbus::magnetics::*;

fn main() -> spinbus::Result<()> {
    let b_ext = [0.0, 20.0, 0.0];
    let line = channel_line(-1000.0, 1500.0, 1251, 0.0, 0.0);
    let sqg = gradients_along_channel(&[Micromagnet::sqg_default()], b_ext, &line, [0.0, 0.0, 1.0])?;
    let ir = gradients_along_channel(&[Micromagnet::ir_default()], b_ext, &line, [0.0, 0.0, 1.0])?;
    println!("single-qubit magnet: peak |dB_perp/dx| = {:.3} mT/nm", sqg.peak_abs_d_perp());
    println!("single-qubit magnet: peak |dB_par/dx|  = {:.4} mT/nm", sqg.peak_abs_d_par());
    println!("IR magnet: max B_par difference over 200 nm = {:.2} mT", ir.max_parallel_difference(200.0));
    let out = std::env::temp_dir().join("sqg_profile.csv");
    sqg.save_csv(&out)?;
    println!("profile written to {}", out.display());
    Ok(())
}
