//! Exchange energy of two electrons in a 1D double well.
//!
//! The potential is sampled along a channel path, the two-electron
//! Hamiltonian is discretized on the product grid with a softened Coulomb
//! interaction, and the lowest states of the spatially symmetric (singlet) and
//! antisymmetric (triplet) sectors are found by Lanczos. J = E_A − E_S.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::eigen::{lowest_eigenpairs, LanczosOptions, SymmetricOperator};
use crate::gatesim::ExchangeLaw;
use crate::physcore::{COULOMB_UEV_NM, HBAR2_OVER_2ME_UEV_NM2};
use crate::potentials::{DeviceModel, PotentialField, WaveformProgram};
use crate::{Error, Result};

/// Potential along a path with exactly two minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleWell1D {
    /// Arc length along the path (nm), uniformly spaced.
    pub s: Vec<f64>,
    /// Potential energy (μeV).
    pub v: Vec<f64>,
    /// Refined minimum positions, left then right.
    pub minima: [f64; 2],
    pub separation: f64,
    /// V(right minimum) − V(left minimum).
    pub detuning: f64,
    /// Barrier top between the minima, measured from the deeper minimum.
    pub barrier: f64,
}

/// Outcome of locating the wells: late approach frames may merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WellShape {
    Double(DoubleWell1D),
    Merged { position: f64, depth: f64 },
}

impl WellShape {
    pub fn double(self) -> Option<DoubleWell1D> {
        match self {
            WellShape::Double(w) => Some(w),
            WellShape::Merged { .. } => None,
        }
    }
}

/// Parabolic refinement of a discrete minimum at index `i`.
fn refine(s: &[f64], v: &[f64], i: usize) -> (f64, f64) {
    let h = s[1] - s[0];
    let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
    let den = a - 2.0 * b + c;
    if den <= 0.0 {
        return (s[i], b);
    }
    let off = 0.5 * (a - c) / den;
    (s[i] + off * h, b - 0.25 * (a - c) * off)
}

impl DoubleWell1D {
    /// Locate the minima of uniformly sampled `v(s)`. Endpoints never count
    /// as minima.
    pub fn from_samples(s: Vec<f64>, v: Vec<f64>) -> Result<WellShape> {
        if s.len() != v.len() || s.len() < 5 {
            return Err(Error::InvalidParameter("need at least 5 matching samples".into()));
        }
        let h = s[1] - s[0];
        if !(h > 0.0) || s.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
            return Err(Error::InvalidParameter("samples must be uniformly spaced".into()));
        }
        let idx: Vec<usize> = (1..v.len() - 1).filter(|&i| v[i] < v[i - 1] && v[i] <= v[i + 1]).collect();
        match idx.len() {
            0 => Err(Error::WellShape("no minimum inside the window".into())),
            1 => {
                let (position, depth) = refine(&s, &v, idx[0]);
                Ok(WellShape::Merged { position, depth })
            }
            2 => {
                let (x0, v0) = refine(&s, &v, idx[0]);
                let (x1, v1) = refine(&s, &v, idx[1]);
                let top = v[idx[0]..=idx[1]].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                Ok(WellShape::Double(DoubleWell1D {
                    minima: [x0, x1],
                    separation: x1 - x0,
                    detuning: v1 - v0,
                    barrier: top - v0.min(v1),
                    s,
                    v,
                }))
            }
            n => Err(Error::WellShape(format!("{n} minima inside the window"))),
        }
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn potential(&self, s: f64) -> Option<f64> {
        let h = self.s[1] - self.s[0];
        let u = (s - self.s[0]) / h;
        let n = self.s.len();
        if !(u >= -1e-9 && u <= (n - 1) as f64 + 1e-9) {
            return None;
        }
        let i = (u.floor().max(0.0) as usize).min(n - 2);
        let f = u - i as f64;
        Some(self.v[i] * (1.0 - f) + self.v[i + 1] * f)
    }

    /// The well reflected about the centre of its window.
    pub fn mirrored(&self) -> WellShape {
        let mut v = self.v.clone();
        v.reverse();
        Self::from_samples(self.s.clone(), v).expect("mirror of a valid well")
    }

    /// Harmonic length ħ/√(m*·V'') at the shallower minimum, from a
    /// five-point curvature estimate.
    pub fn harmonic_length(&self, effective_mass: f64) -> f64 {
        let h = self.s[1] - self.s[0];
        let m = self.minima[usize::from(self.detuning < 0.0)];
        let pts: Vec<f64> = (-2..=2).filter_map(|k| self.potential(m + k as f64 * h)).collect();
        if pts.len() < 5 {
            return f64::NAN;
        }
        let curv = (-pts[0] + 16.0 * pts[1] - 30.0 * pts[2] + 16.0 * pts[3] - pts[4]) / (12.0 * h * h);
        (HBAR2_OVER_2ME_UEV_NM2 / effective_mass * 2.0 / curv).powf(0.25)
    }
}

/// Sample `field` along a polyline; `window` is an arc-length interval
/// measured from the first path point. Samples are `spacing` apart.
pub fn extract_double_well(
    field: &PotentialField,
    path: &[[f64; 2]],
    window: [f64; 2],
    spacing: f64,
) -> Result<WellShape> {
    if path.len() < 2 {
        return Err(Error::InvalidGeometry("path needs at least two points".into()));
    }
    if !(spacing > 0.0 && window[1] > window[0] && window[0] >= 0.0) {
        return Err(Error::InvalidParameter("window must be increasing and non-negative".into()));
    }
    let n = ((window[1] - window[0]) / spacing).round() as usize + 1;
    let mut s = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for k in 0..n {
        let arc = window[0] + k as f64 * spacing;
        let (x, y) = point_on_path(path, arc)
            .ok_or_else(|| Error::OutOfDomain(format!("arc length {arc} nm beyond the path")))?;
        let val = field
            .sample(x, y)
            .ok_or_else(|| Error::OutOfDomain(format!("path point ({x:.1}, {y:.1}) outside the grid")))?;
        s.push(arc);
        v.push(val);
    }
    DoubleWell1D::from_samples(s, v)
}

fn point_on_path(path: &[[f64; 2]], arc: f64) -> Option<(f64, f64)> {
    let mut left = arc;
    for w in path.windows(2) {
        let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
        let len = dx.hypot(dy);
        if left <= len + 1e-9 {
            let f = (left / len).min(1.0);
            return Some((w[0][0] + f * dx, w[0][1] + f * dy));
        }
        left -= len;
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoElectronParams {
    /// In electron masses.
    pub effective_mass: f64,
    pub epsilon_r: f64,
    /// Coulomb softening length (nm).
    pub softening: f64,
    /// Product-grid spacing (nm).
    pub spacing: f64,
    /// Multiplies the Coulomb term; 0 gives independent electrons.
    pub interaction_scale: f64,
}

impl Default for TwoElectronParams {
    fn default() -> Self {
        Self { effective_mass: 0.19, epsilon_r: 11.7, softening: 5.0, spacing: 2.0, interaction_scale: 1.0 }
    }
}

impl TwoElectronParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.effective_mass > 0.0 && self.epsilon_r > 0.0 && self.softening > 0.0 && self.spacing > 0.0;
        if !ok || !(self.interaction_scale >= 0.0) {
            return Err(Error::InvalidParameter(format!("two-electron parameters must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeSolve {
    /// E_A − E_S (μeV).
    pub j: f64,
    pub e_symmetric: f64,
    pub e_antisymmetric: f64,
    /// Smallest |J| the eigensolve can distinguish from zero (μeV).
    pub resolution: f64,
    pub iterations: usize,
}

impl ExchangeSolve {
    pub fn resolved(&self) -> bool {
        self.j > self.resolution
    }
}

/// Fourth-order −d²/dx² stencil (×1/h²): centre, ±1, ±2.
const STENCIL: [f64; 3] = [2.5, -4.0 / 3.0, 1.0 / 12.0];

/// H on ψ(x₁, x₂) stored row-major as ψ[i·n + k]; hard walls outside.
struct ProductHamiltonian {
    n: usize,
    kinetic: f64,
    v: Vec<f64>,
    coulomb: Vec<f64>,
}

impl SymmetricOperator for ProductHamiltonian {
    fn dim(&self) -> usize {
        self.n * self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let (c1, c2) = (STENCIL[1] * self.kinetic, STENCIL[2] * self.kinetic);
        let diag = 2.0 * STENCIL[0] * self.kinetic;
        for i in 0..n {
            for k in 0..n {
                let at = |a: usize, b: usize| x[a * n + b];
                let mut acc = (diag + self.v[i] + self.v[k] + self.coulomb[i.abs_diff(k)]) * at(i, k);
                for (off, c) in [(1, c1), (2, c2)] {
                    if k >= off {
                        acc += c * at(i, k - off);
                    }
                    if k + off < n {
                        acc += c * at(i, k + off);
                    }
                    if i >= off {
                        acc += c * at(i - off, k);
                    }
                    if i + off < n {
                        acc += c * at(i + off, k);
                    }
                }
                y[i * n + k] = acc;
            }
        }
    }
}

fn exchange_project(n: usize, sign: f64) -> impl Fn(&mut [f64]) {
    move |x: &mut [f64]| {
        for i in 0..n {
            for k in 0..i {
                let a = x[i * n + k];
                let b = x[k * n + i];
                let m = 0.5 * (a + sign * b);
                x[i * n + k] = m;
                x[k * n + i] = sign * m;
            }
            if sign < 0.0 {
                x[i * n + i] = 0.0;
            }
        }
    }
}

/// Exchange splitting of `well` with hard walls at the ends of its window.
pub fn exchange_energy(well: &DoubleWell1D, params: &TwoElectronParams) -> Result<ExchangeSolve> {
    params.validate()?;
    let h = params.spacing;
    let ell = well.harmonic_length(params.effective_mass);
    if !(ell >= 4.0 * h) {
        return Err(Error::InvalidParameter(format!(
            "grid spacing {h} nm does not resolve a well of harmonic length {ell:.2} nm"
        )));
    }
    let (s0, s1) = (well.s[0], *well.s.last().unwrap());
    // interior points only; ψ vanishes at the window ends
    let n = ((s1 - s0) / h).floor() as usize - 1;
    let v: Vec<f64> = (1..=n).map(|k| well.potential(s0 + k as f64 * h).unwrap()).collect();
    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let coulomb_k = params.interaction_scale * COULOMB_UEV_NM / params.epsilon_r;
    let op = ProductHamiltonian {
        n,
        kinetic: HBAR2_OVER_2ME_UEV_NM2 / params.effective_mass / (h * h),
        v: v.iter().map(|e| e - vmin).collect(),
        coulomb: (0..n).map(|d| coulomb_k / ((d as f64 * h).powi(2) + params.softening.powi(2)).sqrt()).collect(),
    };
    let opts = LanczosOptions { max_iter: 3000, rel_tol: 1e-12, ..Default::default() };
    let sym = exchange_project(n, 1.0);
    let anti = exchange_project(n, -1.0);
    let rs = lowest_eigenpairs(&op, 1, &opts, Some(&sym))?;
    let ra = lowest_eigenpairs(&op, 1, &opts, Some(&anti))?;
    let (es, ea) = (rs.values[0] + 2.0 * vmin, ra.values[0] + 2.0 * vmin);
    let j = ea - es;
    // eigenvalues carry a backward error of order ε·‖H‖
    let norm_bound = 4.0 * (STENCIL[0] + 2.0 * (STENCIL[1].abs() + STENCIL[2])) * op.kinetic
        + 2.0 * op.v.iter().cloned().fold(0.0, f64::max)
        + op.coulomb[0];
    let resolution = 1e-14 * norm_bound;
    // ground state of two particles in 1D is nodeless, hence symmetric
    if j < -resolution {
        return Err(Error::InvalidParameter(format!(
            "antisymmetric state below symmetric one (J = {j:.3e} μeV); the solve is not trustworthy"
        )));
    }
    Ok(ExchangeSolve {
        j,
        e_symmetric: es,
        e_antisymmetric: ea,
        resolution,
        iterations: rs.iterations.max(ra.iterations),
    })
}

/// Single-particle levels of `well` on the same grid and walls used by
/// [`exchange_energy`].
pub fn single_particle_levels(well: &DoubleWell1D, params: &TwoElectronParams, count: usize) -> Result<Vec<f64>> {
    params.validate()?;
    let h = params.spacing;
    let (s0, s1) = (well.s[0], *well.s.last().unwrap());
    let n = ((s1 - s0) / h).floor() as usize - 1;
    let t = HBAR2_OVER_2ME_UEV_NM2 / params.effective_mass / (h * h);
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        m[(k, k)] = STENCIL[0] * t + well.potential(s0 + (k + 1) as f64 * h).unwrap();
        for off in 1..=2 {
            if k + off < n {
                m[(k, k + off)] = STENCIL[off] * t;
                m[(k + off, k)] = STENCIL[off] * t;
            }
        }
    }
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
    e.sort_by(f64::total_cmp);
    e.truncate(count);
    Ok(e)
}

/// Exponential fit ln J = ln(j_ref) − (d − d_ref)/decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub j_ref: f64,
    pub d_ref: f64,
    pub decay: f64,
    pub r_squared: f64,
}

impl ExponentialFit {
    /// Least squares on (d, ln J); `d_ref` is the mean distance.
    pub fn fit(d: &[f64], j: &[f64]) -> Result<Self> {
        let pts: Vec<(f64, f64)> = d.iter().zip(j).filter(|(_, &j)| j > 0.0).map(|(&d, &j)| (d, j.ln())).collect();
        if pts.len() < 3 {
            return Err(Error::InvalidParameter("exponential fit needs three positive points".into()));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
        let slope = sxy / sxx;
        let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
        Ok(Self { j_ref: my.exp(), d_ref: mx, decay: -1.0 / slope, r_squared: 1.0 - ss_res / syy })
    }

    pub fn law(&self) -> ExchangeLaw {
        ExchangeLaw::Exponential { j_ref: self.j_ref, d_ref: self.d_ref, decay: self.decay }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JPoint {
    /// Program time of the frame (ns).
    pub t: f64,
    pub d: f64,
    pub j: f64,
    pub detuning: f64,
    pub barrier: f64,
}

/// J(d) table sorted by increasing d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JCurve {
    pub points: Vec<JPoint>,
    /// Frames skipped because the wells had merged.
    pub merged_frames: Vec<f64>,
    /// Frames whose J fell below the solver resolution.
    pub unresolved_frames: Vec<f64>,
    pub fit: ExponentialFit,
}

impl JCurve {
    pub fn from_points(mut points: Vec<JPoint>, merged_frames: Vec<f64>, unresolved_frames: Vec<f64>) -> Result<Self> {
        points.sort_by(|a, b| a.d.total_cmp(&b.d));
        let d: Vec<f64> = points.iter().map(|p| p.d).collect();
        let j: Vec<f64> = points.iter().map(|p| p.j).collect();
        let fit = ExponentialFit::fit(&d, &j)?;
        Ok(Self { points, merged_frames, unresolved_frames, fit })
    }

    /// The tabulated law (log-linear between points).
    pub fn law(&self) -> ExchangeLaw {
        ExchangeLaw::Table {
            d: self.points.iter().map(|p| p.d).collect(),
            j: self.points.iter().map(|p| p.j).collect(),
        }
    }

    pub fn d_range(&self) -> (f64, f64) {
        (self.points[0].d, self.points[self.points.len() - 1].d)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "d_nm,J_ueV")?;
        for p in &self.points {
            writeln!(w, "{},{}", p.d, p.j)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))?;
        Ok(())
    }
}

enum Frame {
    Solved(JPoint),
    Merged,
    Unresolved,
}

/// Evaluate J for every frame time of `program`; frames solve in parallel.
pub fn j_of_d_curve(
    device: &DeviceModel,
    program: &WaveformProgram,
    times: &[f64],
    path: &[[f64; 2]],
    window: [f64; 2],
    params: &TwoElectronParams,
) -> Result<JCurve> {
    params.validate()?;
    let solve = |t: f64| -> Result<Frame> {
        let field = device.field_at(program, t)?;
        match extract_double_well(&field, path, window, params.spacing)? {
            WellShape::Merged { .. } => Ok(Frame::Merged),
            WellShape::Double(w) => {
                let r = exchange_energy(&w, params)?;
                if !r.resolved() {
                    return Ok(Frame::Unresolved);
                }
                Ok(Frame::Solved(JPoint { t, d: w.separation, j: r.j, detuning: w.detuning, barrier: w.barrier }))
            }
        }
    };
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(times.len().max(1));
    let chunk = times.len().div_ceil(workers.max(1)).max(1);
    let results: Vec<Result<Frame>> = std::thread::scope(|scope| {
        let handles: Vec<_> = times
            .chunks(chunk)
            .map(|ts| scope.spawn(move || ts.iter().map(|&t| solve(t)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("exchange worker panicked")).collect()
    });
    let mut points = Vec::new();
    let mut merged = Vec::new();
    let mut unresolved = Vec::new();
    for (r, &t) in results.into_iter().zip(times) {
        match r? {
            Frame::Solved(p) => points.push(p),
            Frame::Merged => merged.push(t),
            Frame::Unresolved => unresolved.push(t),
        }
    }
    JCurve::from_points(points, merged, unresolved)
}

/// Manipulation-zone approach used to tabulate J(d): both lanes carry their
/// dots towards the central barrier, which is held at a fixed voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproachSpec {
    #[serde(rename = "amplitude_mV")]
    pub amplitude_mv: f64,
    #[serde(rename = "barrier_mV")]
    pub barrier_mv: f64,
    #[serde(rename = "screening_mV")]
    pub screening_mv: f64,
    /// Lane phases at the start and end of the approach (rad).
    pub far_phase: f64,
    pub near_phase: f64,
    pub ramp_ns: f64,
    /// Clavier fingers per side.
    pub fingers: i64,
    /// Potential grid spacing (nm).
    pub grid_spacing: f64,
    /// Analysis window half-width around the barrier (nm).
    pub half_window: f64,
}

impl Default for ApproachSpec {
    fn default() -> Self {
        Self {
            amplitude_mv: 200.0,
            barrier_mv: 64.0,
            screening_mv: -100.0,
            far_phase: 0.25 * std::f64::consts::PI,
            near_phase: -0.39 * std::f64::consts::PI,
            ramp_ns: 100.0,
            fingers: 4,
            grid_spacing: 2.0,
            half_window: 150.0,
        }
    }
}

impl ApproachSpec {
    pub fn layout(&self) -> crate::potentials::DeviceLayout {
        crate::potentials::DeviceLayout::manipulation_zone(Default::default(), self.fingers)
    }

    pub fn device(&self) -> Result<DeviceModel> {
        let layout = self.layout();
        let x1 = self.half_window + 10.0;
        let grid = crate::potentials::Grid2::covering(-x1, x1, -10.0, 10.0, self.grid_spacing);
        DeviceModel::new(layout, &grid)
    }

    /// Approach, a short hold and the mirrored retreat.
    pub fn program(&self) -> WaveformProgram {
        crate::potentials::approach_program(
            self.amplitude_mv,
            self.barrier_mv,
            self.screening_mv,
            self.far_phase,
            self.near_phase,
            self.ramp_ns,
            1.0,
        )
    }

    /// Channel centreline through the barrier; arc length 0 at −half_window.
    pub fn path(&self) -> [[f64; 2]; 2] {
        [[-self.half_window, 0.0], [self.half_window, 0.0]]
    }

    pub fn window(&self) -> [f64; 2] {
        [0.0, 2.0 * self.half_window]
    }

    /// `n` frame times evenly spread over `[t0, t1]` of the approach ramp.
    pub fn frame_times(&self, t0: f64, t1: f64, n: usize) -> Vec<f64> {
        let n = n.max(2);
        (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect()
    }

    pub fn curve(&self, times: &[f64], params: &TwoElectronParams) -> Result<JCurve> {
        let device = self.device()?;
        j_of_d_curve(&device, &self.program(), times, &self.path(), self.window(), params)
    }
}

/// J(d) of the default [`ApproachSpec`] with default [`TwoElectronParams`],
/// sampled every 0.5 ns from 78 ns to 85.5 ns of the approach. Recomputing
/// takes about half a minute, so the CZ defaults use this snapshot.
pub const DEFAULT_J_TABLE: [(f64, f64); 16] = [
    (42.589, 6.018303e-2),
    (57.037, 4.234771e-2),
    (66.655, 2.869477e-2),
    (74.034, 1.865908e-2),
    (79.914, 1.160698e-2),
    (85.021, 6.889051e-3),
    (89.480, 3.894314e-3),
    (93.420, 2.095013e-3),
    (96.958, 1.072869e-3),
    (100.190, 5.236975e-4),
    (103.189, 2.441950e-4),
    (106.009, 1.090821e-4),
    (108.536, 4.683193e-5),
    (110.967, 1.939048e-5),
    (113.250, 7.771814e-6),
    (115.386, 3.024375e-6),
];

pub fn default_exchange_law() -> ExchangeLaw {
    ExchangeLaw::Table {
        d: DEFAULT_J_TABLE.iter().map(|p| p.0).collect(),
        j: DEFAULT_J_TABLE.iter().map(|p| p.1).collect(),
    }
}

impl JCurve {
    /// Points whose J lies within `[j_hold / decades_below, j_hold]`, plus
    /// the closest point beyond the hold so the hold is bracketed.
    pub fn operating_range(&self, j_hold: f64, decades_below: f64) -> Vec<JPoint> {
        let lo = j_hold * 10f64.powf(-decades_below);
        let mut pts: Vec<JPoint> = self.points.iter().filter(|p| p.j >= lo && p.j <= j_hold).cloned().collect();
        if let Some(beyond) = self.points.iter().filter(|p| p.j > j_hold).max_by(|a, b| a.d.total_cmp(&b.d)) {
            pts.push(*beyond);
        }
        pts.sort_by(|a, b| a.d.total_cmp(&b.d));
        pts
    }

    /// Distance at which the tabulated law reaches `j`.
    pub fn hold_distance(&self, j: f64) -> Option<f64> {
        self.law().distance_for(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn quartic(v0: f64, a: f64, tilt: f64, half: f64) -> WellShape {
        let h = 0.5;
        let n = (2.0 * half / h).round() as usize + 1;
        let s: Vec<f64> = (0..n).map(|k| -half + k as f64 * h).collect();
        let v = s.iter().map(|x| v0 * ((x / a).powi(2) - 1.0).powi(2) + tilt * x).collect();
        DoubleWell1D::from_samples(s, v).unwrap()
    }

    fn well(v0: f64, a: f64, half: f64) -> DoubleWell1D {
        quartic(v0, a, 0.0, half).double().unwrap()
    }

    /// Sinc-DVR kinetic matrix on interior points of the well window.
    fn dvr(w: &DoubleWell1D, p: &TwoElectronParams, h: f64) -> (Vec<f64>, DMatrix<f64>) {
        let (s0, s1) = (w.s[0], *w.s.last().unwrap());
        let n = ((s1 - s0) / h).floor() as usize - 1;
        let xs: Vec<f64> = (1..=n).map(|k| s0 + k as f64 * h).collect();
        let t = HBAR2_OVER_2ME_UEV_NM2 / p.effective_mass / (h * h);
        let k = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                t * std::f64::consts::PI.powi(2) / 3.0
            } else {
                let d = i as f64 - j as f64;
                t * 2.0 * (-1f64).powi(d as i32) / (d * d)
            }
        });
        (xs, k)
    }

    fn dvr_levels(w: &DoubleWell1D, p: &TwoElectronParams, h: f64) -> Vec<f64> {
        let (xs, mut m) = dvr(w, p, h);
        for (i, x) in xs.iter().enumerate() {
            m[(i, i)] += w.potential(*x).unwrap();
        }
        let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Dense two-electron oracle in (anti)symmetrized DVR pair states.
    fn dvr_two_electron(w: &DoubleWell1D, p: &TwoElectronParams, h: f64) -> f64 {
        let (xs, k) = dvr(w, p, h);
        let n = xs.len();
        let coul = |a: usize, b: usize| {
            p.interaction_scale * COULOMB_UEV_NM / p.epsilon_r / ((xs[a] - xs[b]).powi(2) + p.softening.powi(2)).sqrt()
        };
        let one = |a: usize, b: usize| k[(a, b)] + if a == b { w.potential(xs[a]).unwrap() } else { 0.0 };
        let lowest = |sign: f64| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).filter(|&(i, j)| sign > 0.0 || i != j).collect();
            let norm = |i: usize, j: usize| if i == j { 0.5 } else { 1.0 / 2f64.sqrt() };
            // ⟨x_i x_j| H |x_k x_l⟩ on the product basis
            let prod = |i: usize, j: usize, k2: usize, l: usize| {
                let mut v = 0.0;
                if j == l {
                    v += one(i, k2);
                }
                if i == k2 {
                    v += one(j, l);
                }
                if i == k2 && j == l {
                    v += coul(i, j);
                }
                v
            };
            let m = DMatrix::from_fn(pairs.len(), pairs.len(), |a, b| {
                let (i, j) = pairs[a];
                let (k2, l) = pairs[b];
                let raw = prod(i, j, k2, l) + sign * prod(i, j, l, k2) + sign * prod(j, i, k2, l) + prod(j, i, l, k2);
                raw * norm(i, j) * norm(k2, l)
            });
            m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
        };
        lowest(-1.0) - lowest(1.0)
    }

    #[test]
    fn non_interacting_limit_is_single_particle_splitting() {
        let w = well(2000.0, 30.0, 90.0);
        let p = TwoElectronParams { interaction_scale: 0.0, ..Default::default() };
        let r = exchange_energy(&w, &p).unwrap();
        let e = dvr_levels(&w, &p, 1.0);
        let split = e[1] - e[0];
        assert!((r.j - split).abs() / split < 1e-3, "{} vs {split}", r.j);
    }

    #[test]
    fn matches_dense_two_electron_oracle() {
        let w = well(2000.0, 30.0, 80.0);
        let p = TwoElectronParams::default();
        let j = exchange_energy(&w, &p).unwrap().j;
        let oracle = dvr_two_electron(&w, &p, 3.0);
        assert!((j - oracle).abs() / oracle < 0.05, "{j} vs {oracle}");
        assert!(j > 0.0);
    }

    #[test]
    fn halving_the_grid_changes_little() {
        let w = well(2000.0, 30.0, 80.0);
        let p = TwoElectronParams::default();
        let a = exchange_energy(&w, &p).unwrap().j;
        let b = exchange_energy(&w, &TwoElectronParams { spacing: 1.0, ..p }).unwrap().j;
        assert!((a - b).abs() / b < 0.02, "{a} vs {b}");
    }

    #[test]
    fn distant_wells_decouple() {
        let w = well(6000.0, 70.0, 120.0);
        let r = exchange_energy(&w, &TwoElectronParams::default()).unwrap();
        assert!(r.j < 1e-6, "{}", r.j);
    }

    #[test]
    fn mirror_image_has_the_same_exchange() {
        let w = quartic(300.0, 12.0, 2.0, 60.0).double().unwrap();
        let m = w.mirrored().double().unwrap();
        assert!((w.detuning + m.detuning).abs() < 1e-9);
        let p = TwoElectronParams::default();
        let (a, b) = (exchange_energy(&w, &p).unwrap().j, exchange_energy(&m, &p).unwrap().j);
        assert!(a > 20.0, "{a}");
        assert!((a - b).abs() / a < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn unresolved_grid_is_rejected() {
        let w = well(2000.0, 30.0, 80.0);
        let p = TwoElectronParams { spacing: 6.0, ..Default::default() };
        assert!(matches!(exchange_energy(&w, &p), Err(Error::InvalidParameter(_))));
        assert!(TwoElectronParams { softening: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn well_shapes() {
        let s: Vec<f64> = (0..201).map(|k| -100.0 + k as f64).collect();
        let single: Vec<f64> = s.iter().map(|x| x * x).collect();
        assert!(matches!(
            DoubleWell1D::from_samples(s.clone(), single).unwrap(),
            WellShape::Merged { position, .. } if position.abs() < 1e-9
        ));
        let slope: Vec<f64> = s.clone();
        assert!(matches!(DoubleWell1D::from_samples(s.clone(), slope), Err(Error::WellShape(_))));
        let triple: Vec<f64> = s.iter().map(|x| (x / 15.0).cos() * -(x * x) / 1e4 + 1e-4 * x * x).collect();
        assert!(DoubleWell1D::from_samples(s.clone(), triple).is_err());
        let w = quartic(1000.0, 40.0, 0.0, 100.0).double().unwrap();
        assert!((w.separation - 80.0).abs() < 0.01 && w.detuning.abs() < 1e-9);
        assert!((w.barrier - 1000.0).abs() < 1.0);
    }

    #[test]
    fn exponential_fit_recovers_decay() {
        let d: Vec<f64> = (0..8).map(|k| 50.0 + 5.0 * k as f64).collect();
        let j: Vec<f64> = d.iter().map(|d| 0.3 * (-(d - 50.0) / 7.0).exp()).collect();
        let f = ExponentialFit::fit(&d, &j).unwrap();
        assert!((f.decay - 7.0).abs() < 1e-9 && (f.r_squared - 1.0).abs() < 1e-12);
        assert!((f.law().j(50.0).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let pts = (0..3)
            .map(|k| JPoint { t: k as f64, d: 60.0 + k as f64, j: 0.1 / (k + 1) as f64, detuning: 0.0, barrier: 10.0 })
            .collect();
        let c = JCurve::from_points(pts, vec![], vec![]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("d_nm,J_ueV\n60,0.1\n"));
        assert_eq!(text.lines().count(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn symmetric_sector_lies_lowest(v0 in 800.0..3000.0f64, a in 22.0..35.0f64, tilt in -1.0..1.0f64) {
            if let WellShape::Double(w) = quartic(v0, a, tilt, 70.0) {
                let r = exchange_energy(&w, &TwoElectronParams::default()).unwrap();
                prop_assert!(r.j > -r.resolution);
                prop_assert!(r.e_symmetric <= r.e_antisymmetric + r.resolution);
            }
        }
    }
}
