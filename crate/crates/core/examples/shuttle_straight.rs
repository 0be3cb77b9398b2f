//! Shuttle a dot straight through a T-junction and track its orbital splitting.

use spinbus::potentials::*;

fn main() -> spinbus::Result<()> {
    let layout = DeviceLayout::t_junction(DeviceDefaults::default(), 5, 6);
    let grid = Grid2::covering(-400.0, 400.0, -250.0, 600.0, 2.0);
    let device = DeviceModel::new(layout.clone(), &grid)?;
    let program = corner_shuttle_program(&layout, &CornerProgramSpec { turn: false, ..Default::default() })?;
    let frames = device.frames(&program, 41)?;
    let track = track_dot_minimum(&frames, (-200.0, 0.0), &TrackOptions::default())?;
    let opts = OrbitalOptions { spacing: 2.0, window: 200.0, ..Default::default() };

    println!("{:>8} {:>8} {:>8} {:>12}", "t (ns)", "x (nm)", "y (nm)", "E1-E0 (ueV)");
    let mut min = f64::INFINITY;
    for (k, (p, f)) in track.iter().zip(&frames).enumerate() {
        let o = orbital_splitting(f, (p.x, p.y), &opts)?;
        min = min.min(o.splitting);
        if k % 5 == 0 {
            println!("{:8.1} {:8.1} {:8.1} {:12.1}", p.t, p.x, p.y, o.splitting);
        }
    }
    println!("minimum orbital splitting: {min:.0} ueV");
    Ok(())
}
