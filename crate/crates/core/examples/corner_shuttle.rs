//! Turn a dot around a T-junction corner and compare its confinement with
//! straight shuttling through the same junction.

use spinbus::potentials::*;

fn min_splitting(device: &DeviceModel, layout: &DeviceLayout, turn: bool) -> spinbus::Result<(f64, TrackPoint)> {
    let program = corner_shuttle_program(layout, &CornerProgramSpec { turn, ..Default::default() })?;
    let frames = device.frames(&program, 81)?;
    let track = track_dot_minimum(&frames, (-200.0, 0.0), &TrackOptions::default())?;
    let opts = OrbitalOptions { spacing: 2.0, window: 200.0, ..Default::default() };
    let mut min = f64::INFINITY;
    for (p, f) in track.iter().zip(&frames) {
        min = min.min(orbital_splitting(f, (p.x, p.y), &opts)?.splitting);
    }
    Ok((min, *track.last().expect("frames")))
}

fn main() -> spinbus::Result<()> {
    let layout = DeviceLayout::t_junction(DeviceDefaults::default(), 5, 6);
    let grid = Grid2::covering(-400.0, 400.0, -250.0, 600.0, 2.0);
    let device = DeviceModel::new(layout.clone(), &grid)?;
    let (straight, s_end) = min_splitting(&device, &layout, false)?;
    let (corner, c_end) = min_splitting(&device, &layout, true)?;
    println!("straight: min splitting {straight:.0} ueV, ends at ({:.0}, {:.0}) nm", s_end.x, s_end.y);
    println!("corner:   min splitting {corner:.0} ueV, ends at ({:.0}, {:.0}) nm", c_end.x, c_end.y);
    println!("dip relative to straight: {:.0} ueV", straight - corner);
    Ok(())
}
