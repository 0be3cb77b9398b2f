use super::gates::PotentialField;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub v_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOptions {
    /// Largest allowed displacement between consecutive frames (nm).
    pub max_jump: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self { max_jump: 50.0 }
    }
}

const NEIGHBOURS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Follow the occupied minimum through a sequence of frames by discrete
/// steepest descent from the previous frame's position.
pub fn track_dot_minimum(frames: &[PotentialField], start: (f64, f64), opts: &TrackOptions) -> Result<Vec<TrackPoint>> {
    let mut out = Vec::with_capacity(frames.len());
    let mut pos = start;
    for (k, field) in frames.iter().enumerate() {
        let g = &field.grid;
        if !g.contains(pos.0, pos.1) {
            return Err(Error::TrackingLost {
                frame: k,
                reason: format!("position ({:.1}, {:.1}) left the grid", pos.0, pos.1),
            });
        }
        let mut i = ((pos.0 - g.x0) / g.spacing).round() as isize;
        let mut j = ((pos.1 - g.y0) / g.spacing).round() as isize;
        loop {
            let here = field.at_index(i as usize, j as usize);
            // nearest-first scan keeps ties deterministic: lower V, then (x, y)
            let mut best: Option<(f64, isize, isize)> = None;
            for (di, dj) in NEIGHBOURS {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= g.nx as isize || nj >= g.ny as isize {
                    continue;
                }
                let v = field.at_index(ni as usize, nj as usize);
                let better = match best {
                    None => true,
                    Some((bv, bi, bj)) => v < bv || (v == bv && (ni, nj) < (bi, bj)),
                };
                if better {
                    best = Some((v, ni, nj));
                }
            }
            match best {
                Some((v, ni, nj)) if v < here => {
                    i = ni;
                    j = nj;
                }
                _ => break,
            }
        }
        if i == 0 || j == 0 || i == g.nx as isize - 1 || j == g.ny as isize - 1 {
            return Err(Error::TrackingLost {
                frame: k,
                reason: "descent reached the grid boundary (dot spilled)".into(),
            });
        }
        let (iu, ju) = (i as usize, j as usize);
        let v0 = field.at_index(iu, ju);
        // parabolic sub-grid refinement per axis
        let refine = |vm: f64, vp: f64| {
            let den = vm - 2.0 * v0 + vp;
            if den > 0.0 {
                (0.5 * (vm - vp) / den).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        };
        let dx = refine(field.at_index(iu - 1, ju), field.at_index(iu + 1, ju));
        let dy = refine(field.at_index(iu, ju - 1), field.at_index(iu, ju + 1));
        let x = g.x(iu) + dx * g.spacing;
        let y = g.y(ju) + dy * g.spacing;
        if k > 0 {
            let jump = ((x - pos.0).powi(2) + (y - pos.1).powi(2)).sqrt();
            if jump > opts.max_jump {
                return Err(Error::TrackingLost { frame: k, reason: format!("minimum jumped {jump:.1} nm") });
            }
        }
        pos = (x, y);
        out.push(TrackPoint { t: field.time, x, y, v_min: field.sample(x, y).unwrap_or(v0) });
    }
    Ok(out)
}
