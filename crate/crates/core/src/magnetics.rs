//! Stray fields of uniformly magnetized cuboid micromagnets.
//!
//! A uniformly magnetized body is equivalent to surface charge `M·n` on its
//! faces, and every face here is an axis-aligned rectangle, so the field is a
//! sum of closed-form rectangle integrals. Coordinates are nm with `z` the
//! height above the quantum well; fields are mT.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Micromagnet {
    /// Edge lengths (Lx, Ly, Lz) in nm.
    pub dimensions: [f64; 3],
    /// Body center in nm; `z` is the height above the quantum well.
    pub center: [f64; 3],
    /// Unit magnetization direction.
    pub direction: [f64; 3],
    /// Remanent magnetization μ0·M_s in tesla.
    pub mu0_ms: f64,
}

/// Bulk cobalt saturation magnetization (T).
pub const COBALT_MU0_MS: f64 = 1.8;
/// Default magnet height above the quantum well (nm).
pub const DEFAULT_HEIGHT: f64 = 150.0;
/// Default y offset of the magnet centers from the channel axis (nm).
pub const DEFAULT_LATERAL_OFFSET: f64 = 150.0;

impl Micromagnet {
    pub fn new(dimensions: [f64; 3], center: [f64; 3], direction: [f64; 3], mu0_ms: f64) -> Result<Self> {
        let m = Self { dimensions, center, direction, mu0_ms };
        m.validate()?;
        Ok(m)
    }

    /// Cobalt magnet magnetized along +y at the default height.
    pub fn cobalt_y(dimensions: [f64; 3], x: f64, y: f64) -> Self {
        Self { dimensions, center: [x, y, DEFAULT_HEIGHT], direction: [0.0, 1.0, 0.0], mu0_ms: COBALT_MU0_MS }
    }

    /// Magnet beside the single-qubit gate region: 400×200×20 nm³, offset
    /// laterally from the channel so that B_⊥ varies along it.
    pub fn sqg_default() -> Self {
        Self::cobalt_y([400.0, 200.0, 20.0], 200.0, DEFAULT_LATERAL_OFFSET)
    }

    /// Magnet over the initialization/readout zone: 700×200×20 nm³.
    pub fn ir_default() -> Self {
        Self::cobalt_y([700.0, 200.0, 20.0], 350.0, DEFAULT_LATERAL_OFFSET)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dimensions.iter().all(|&d| d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidGeometry(format!("magnet dimensions {:?}", self.dimensions)));
        }
        let norm = self.direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGeometry(format!("magnetization direction has norm {norm}")));
        }
        if !self.mu0_ms.is_finite() {
            return Err(Error::InvalidParameter("magnetization must be finite".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| (p[a] - self.center[a]).abs() <= 0.5 * self.dimensions[a])
    }

    /// Stray field of this magnet alone at `p` (mT). `p` must be outside the body.
    pub fn field(&self, p: [f64; 3]) -> [f64; 3] {
        let mut b = [0.0; 3];
        if self.mu0_ms == 0.0 {
            return b;
        }
        let scale = self.mu0_ms * 1e3 / (4.0 * std::f64::consts::PI);
        for axis in 0..3 {
            let sigma = self.direction[axis];
            if sigma == 0.0 {
                continue;
            }
            let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
            let lo = |a: usize| self.center[a] - 0.5 * self.dimensions[a];
            let hi = |a: usize| self.center[a] + 0.5 * self.dimensions[a];
            for (face, sign) in [(hi(axis), 1.0), (lo(axis), -1.0)] {
                let c = p[axis] - face;
                let a = [p[ua] - hi(ua), p[ua] - lo(ua)];
                let bb = [p[va] - hi(va), p[va] - lo(va)];
                let f = face_integral(a, bb, c);
                let w = scale * sigma * sign;
                b[axis] += w * f[2];
                b[ua] += w * f[0];
                b[va] += w * f[1];
            }
        }
        b
    }
}

/// ∫∫ (a, b, c)/R³ over a ∈ [a0, a1], b ∈ [b0, b1] at fixed normal offset c.
fn face_integral(a: [f64; 2], b: [f64; 2], c: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (ia, &av) in a.iter().enumerate() {
        for (ib, &bv) in b.iter().enumerate() {
            // a[1] and b[1] are the upper limits of the integration variables
            let s = if ia == ib { 1.0 } else { -1.0 };
            let r = (av * av + bv * bv + c * c).sqrt();
            out[0] -= s * log_plus(bv, r, av * av + c * c);
            out[1] -= s * log_plus(av, r, bv * bv + c * c);
            if c != 0.0 {
                out[2] += s * (av * bv / (c * r)).atan();
            }
        }
    }
    out
}

/// ln(t + R) with R² = t² + rest, evaluated without cancellation for t < 0.
fn log_plus(t: f64, r: f64, rest: f64) -> f64 {
    if t >= 0.0 {
        (t + r).ln()
    } else {
        (rest / (r - t)).ln()
    }
}

/// Total field (mT): every magnet's stray field plus the uniform `b_ext`.
pub fn field_at(magnets: &[Micromagnet], b_ext: [f64; 3], point: [f64; 3]) -> Result<[f64; 3]> {
    let mut b = b_ext;
    for m in magnets {
        if m.contains(point) {
            return Err(Error::InsideMagnet { x: point[0], y: point[1], z: point[2] });
        }
        let f = m.field(point);
        for a in 0..3 {
            b[a] += f[a];
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldProfile {
    pub points: Vec<[f64; 3]>,
    /// Unit vector along `B_ext` defining the parallel component.
    pub parallel_axis: [f64; 3],
    pub perpendicular_axis: [f64; 3],
    pub b_par: Vec<f64>,
    pub b_perp: Vec<f64>,
    /// Derivatives along the line's x coordinate (mT/nm).
    pub d_par: Vec<f64>,
    pub d_perp: Vec<f64>,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn unit(v: [f64; 3]) -> Option<[f64; 3]> {
    let n = dot(v, v).sqrt();
    (n > 0.0).then(|| [v[0] / n, v[1] / n, v[2] / n])
}

/// Central differences in x; one-sided at the two ends.
fn derivative(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|i| {
            let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (ys[r] - ys[l]) / (xs[r] - xs[l])
        })
        .collect()
}

/// Sample the field along `line` and resolve it parallel to `B_ext` and
/// along `perpendicular` (projected orthogonal to `B_ext`). With zero `B_ext`
/// the parallel axis is y.
pub fn gradients_along_channel(
    magnets: &[Micromagnet],
    b_ext: [f64; 3],
    line: &[[f64; 3]],
    perpendicular: [f64; 3],
) -> Result<FieldProfile> {
    if line.len() < 3 {
        return Err(Error::InvalidParameter("sample line needs at least 3 points".into()));
    }
    if line.windows(2).any(|w| w[1][0] <= w[0][0]) {
        return Err(Error::InvalidParameter("sample line must be strictly increasing in x".into()));
    }
    let par = unit(b_ext).unwrap_or([0.0, 1.0, 0.0]);
    let proj = dot(perpendicular, par);
    let perp =
        unit([perpendicular[0] - proj * par[0], perpendicular[1] - proj * par[1], perpendicular[2] - proj * par[2]])
            .ok_or_else(|| Error::InvalidParameter("perpendicular axis is parallel to B_ext".into()))?;
    let mut b_par = Vec::with_capacity(line.len());
    let mut b_perp = Vec::with_capacity(line.len());
    for &p in line {
        let b = field_at(magnets, b_ext, p)?;
        b_par.push(dot(b, par));
        b_perp.push(dot(b, perp));
    }
    let xs: Vec<f64> = line.iter().map(|p| p[0]).collect();
    Ok(FieldProfile {
        d_par: derivative(&xs, &b_par),
        d_perp: derivative(&xs, &b_perp),
        points: line.to_vec(),
        parallel_axis: par,
        perpendicular_axis: perp,
        b_par,
        b_perp,
    })
}

/// Evenly spaced points along x at fixed (y, z).
pub fn channel_line(x0: f64, x1: f64, n: usize, y: f64, z: f64) -> Vec<[f64; 3]> {
    let n = n.max(2);
    (0..n).map(|i| [x0 + (x1 - x0) * i as f64 / (n - 1) as f64, y, z]).collect()
}

impl FieldProfile {
    pub fn peak_abs_d_perp(&self) -> f64 {
        self.d_perp.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn peak_abs_d_par(&self) -> f64 {
        self.d_par.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Largest |B_∥(x + separation) − B_∥(x)| over sample pairs that are
    /// `separation` apart (to within half a sample step).
    pub fn max_parallel_difference(&self, separation: f64) -> f64 {
        let xs: Vec<f64> = self.points.iter().map(|p| p[0]).collect();
        let step = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        let mut best: f64 = 0.0;
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                if ((xs[j] - xs[i]) - separation).abs() <= 0.5 * step {
                    best = best.max((self.b_par[j] - self.b_par[i]).abs());
                }
            }
        }
        best
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x_nm,Bpar_mT,Bperp_mT,dBpar_mT_per_nm,dBperp_mT_per_nm")?;
        for i in 0..self.points.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.points[i][0], self.b_par[i], self.b_perp[i], self.d_par[i], self.d_perp[i]
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))?;
        Ok(())
    }
}
