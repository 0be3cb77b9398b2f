use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::valley::ValleyField;
use crate::magnetics::FieldProfile;
use crate::physcore::{SeedSpec, UnitSystem, HBAR_UEV_NS};
use crate::qdyn::{
    monte_carlo_map, optimize_pulse, process_fidelity_with_leakage, CMat, FidelityReport, HamiltonianModel,
    NoiseChannel, NoiseDraw, OptimizeOptions, PropagateOptions, Pulse, Subspace,
};
use crate::{Error, Result};

/// Zeeman energies along the channel (μeV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpinField {
    /// B(x) = B(0) + x·∂B; gradients in μeV/nm.
    Linear { b_par: f64, d_par: f64, b_perp: f64, d_perp: f64 },
    /// Samples on increasing x, interpolated linearly.
    Sampled { x: Vec<f64>, b_par: Vec<f64>, b_perp: Vec<f64> },
}

impl SpinField {
    /// Linear field from values in mT and gradients in mT/nm.
    pub fn linear_mt(units: &UnitSystem, b_par: f64, d_par: f64, b_perp: f64, d_perp: f64) -> Self {
        let e = |v| units.field_to_energy(v);
        SpinField::Linear { b_par: e(b_par), d_par: e(d_par), b_perp: e(b_perp), d_perp: e(d_perp) }
    }

    pub fn from_profile(units: &UnitSystem, p: &FieldProfile) -> Self {
        SpinField::Sampled {
            x: p.points.iter().map(|q| q[0]).collect(),
            b_par: p.b_par.iter().map(|&b| units.field_to_energy(b)).collect(),
            b_perp: p.b_perp.iter().map(|&b| units.field_to_energy(b)).collect(),
        }
    }

    /// (B_∥, B_⊥) at x, or `None` outside sampled data.
    pub fn at(&self, x: f64) -> Option<(f64, f64)> {
        match self {
            SpinField::Linear { b_par, d_par, b_perp, d_perp } => Some((b_par + d_par * x, b_perp + d_perp * x)),
            SpinField::Sampled { x: xs, b_par, b_perp } => {
                let n = xs.len();
                if n < 2 || x < xs[0] || x > xs[n - 1] {
                    return None;
                }
                let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
                let f = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                let lerp = |v: &[f64]| v[i - 1] + f * (v[i] - v[i - 1]);
                Some((lerp(b_par), lerp(b_perp)))
            }
        }
    }
}

/// Spin⊗valley model of one electron (basis index 2·spin + valley, spin
/// ↑ = 0). Energies in μeV, positions in nm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleQubitModel {
    pub field: SpinField,
    pub valley: ValleyField,
    /// Spin-valley couplings (κ_x, κ_y).
    pub kappa: [f64; 2],
    /// Rest position of the electron.
    pub x0: f64,
}

pub const DEFAULT_KAPPA: f64 = 0.01;

/// Noise on the EDSR gate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdsrNoise {
    /// White positional noise PSD (nm²/GHz).
    pub position_psd: f64,
    /// Quasistatic positional offset (nm).
    pub position_sigma: f64,
    /// Quasistatic Zeeman offset (μeV).
    pub zeeman_sigma: f64,
}

impl EdsrNoise {
    fn channels(&self) -> Vec<NoiseChannel> {
        vec![
            NoiseChannel::white(0, self.position_psd),
            NoiseChannel::quasistatic(0, self.position_sigma),
            NoiseChannel::quasistatic(1, self.zeeman_sigma),
        ]
    }
}

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

impl SingleQubitModel {
    /// Uniform valley coupling `delta` over a wide window around `x0`.
    pub fn uniform(field: SpinField, delta: Complex64, x0: f64) -> Self {
        Self { field, valley: ValleyField::uniform(delta, x0 - 1000.0, x0 + 1000.0), kappa: [DEFAULT_KAPPA; 2], x0 }
    }

    fn local(&self, x: f64) -> ((f64, f64), Complex64) {
        let clamp_x = x.clamp(self.valley.x0, self.valley.x_max());
        let b = self.field.at(x).unwrap_or_else(|| self.field.at(clamp_x).unwrap_or((0.0, 0.0)));
        (b, self.valley.at(clamp_x).unwrap_or_default())
    }

    /// Hamiltonian at position `x` with an extra Zeeman offset.
    pub fn hamiltonian_at(&self, x: f64, zeeman_offset: f64) -> CMat {
        let ((bp, bt), d) = self.local(x);
        let bp = bp + zeeman_offset;
        let kz = c(self.kappa[0]) + Complex64::new(0.0, -self.kappa[1]);
        let mut h = CMat::zeros(4, 4);
        // spin block s, valley block v: index 2s + v
        for s in 0..2 {
            let sz = if s == 0 { 1.0 } else { -1.0 };
            let (i0, i1) = (2 * s, 2 * s + 1);
            h[(i0, i0)] = c(0.5 * bp * sz);
            h[(i1, i1)] = c(0.5 * bp * sz);
            // Δx τx + Δy τy + σz(κx τx + κy τy): ⟨0|·|1⟩ = Δ* + σz·(κx − iκy)
            let off = d.conj() + kz * sz;
            h[(i0, i1)] = off;
            h[(i1, i0)] = off.conj();
        }
        for v in 0..2 {
            h[(v, 2 + v)] = c(0.5 * bt);
            h[(2 + v, v)] = c(0.5 * bt);
        }
        h
    }

    pub fn check_domain(&self, x_min: f64, x_max: f64) -> Result<()> {
        let ok = self.field.at(x_min).is_some()
            && self.field.at(x_max).is_some()
            && self.valley.at(x_min).is_some()
            && self.valley.at(x_max).is_some();
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfDomain(format!(
                "trajectory [{x_min:.1}, {x_max:.1}] nm leaves the field or valley profile"
            )))
        }
    }

    /// Computational basis at the rest position: the two lowest eigenstates
    /// (lower valley), ordered [↑, ↓] with phases aligned to the bare spin
    /// states in the lower valley.
    pub fn computational_subspace(&self) -> Result<(Subspace, f64)> {
        let h = self.hamiltonian_at(self.x0, 0.0);
        let eig = h.clone().symmetric_eigen();
        let mut idx: Vec<usize> = (0..4).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let (_, d) = self.local(self.x0);
        let vlow = if d.norm() > 0.0 {
            let ph = d / d.norm();
            [c(std::f64::consts::FRAC_1_SQRT_2), -ph * std::f64::consts::FRAC_1_SQRT_2]
        } else {
            [c(1.0), c(0.0)]
        };
        let mut basis = CMat::zeros(4, 2);
        // higher of the two lowest is ↑ (σz = +1 costs +B_∥/2)
        for (col, &k) in [idx[1], idx[0]].iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            let s = col;
            let overlap = vlow[0].conj() * v[2 * s] + vlow[1].conj() * v[2 * s + 1];
            let phase = if overlap.norm() > 0.0 { overlap.conj() / overlap.norm() } else { c(1.0) };
            for r in 0..4 {
                basis[(r, col)] = v[r] * phase;
            }
        }
        let zeeman = eig.eigenvalues[idx[1]] - eig.eigenvalues[idx[0]];
        Ok((Subspace::from_basis(basis)?, zeeman))
    }

    /// Spin splitting in the lower valley at the rest position (μeV).
    pub fn qubit_splitting(&self) -> Result<f64> {
        Ok(self.computational_subspace()?.1)
    }

    /// ∂B_⊥/∂x at the rest position (μeV/nm), by central difference.
    pub fn transverse_gradient(&self) -> f64 {
        let h = 0.5;
        let (_, a) = self.local(self.x0 - h).0;
        let (_, b) = self.local(self.x0 + h).0;
        (b - a) / (2.0 * h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Rectangular,
    /// sin²(πt/T).
    Hann,
}

impl Envelope {
    pub fn value(&self, t: f64, duration: f64) -> f64 {
        match self {
            Envelope::Rectangular => 1.0,
            Envelope::Hann => (std::f64::consts::PI * t / duration).sin().powi(2),
        }
    }

    /// Time average over the pulse.
    pub fn mean(&self) -> f64 {
        match self {
            Envelope::Rectangular => 1.0,
            Envelope::Hann => 0.5,
        }
    }
}

/// Displacement drive x(t) = x0 + amplitude·env(t)·sin(2πf·t + phase).
/// `phase = π/2` rotates about +x in the frame of the drive, `phase = π`
/// about +y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdsrDrive {
    /// Displacement amplitude (nm); peak-to-peak is twice this.
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub duration: f64,
    pub envelope: Envelope,
    pub dt: f64,
}

impl EdsrDrive {
    /// Resonant drive for a rotation by `angle` at displacement `amplitude`,
    /// with the duration from the first-order Rabi rate.
    pub fn resonant(model: &SingleQubitModel, angle: f64, amplitude: f64, envelope: Envelope) -> Result<Self> {
        let zeeman = model.qubit_splitting()?;
        let grad = model.transverse_gradient();
        if grad == 0.0 || amplitude <= 0.0 {
            return Err(Error::InvalidParameter("EDSR needs a transverse gradient and a displacement".into()));
        }
        // Ω = b/(2ħ) with b = |∂B⊥|·amplitude
        let omega = grad.abs() * amplitude / (2.0 * HBAR_UEV_NS);
        Ok(Self {
            amplitude,
            frequency: zeeman / (2.0 * std::f64::consts::PI * HBAR_UEV_NS),
            phase: std::f64::consts::FRAC_PI_2,
            duration: angle / (omega * envelope.mean()),
            envelope,
            dt: 0.01,
        })
    }

    pub fn position(&self, x0: f64, t: f64) -> f64 {
        x0 + self.amplitude
            * self.envelope.value(t, self.duration)
            * (2.0 * std::f64::consts::PI * self.frequency * t + self.phase).sin()
    }

    pub fn pulse(&self, x0: f64) -> Result<Pulse> {
        Pulse::sample(self.duration, self.dt, |t| vec![self.position(x0, t)])
    }

    /// Rotation axis angle in the xy-plane of the rotating frame.
    pub fn axis_angle(&self) -> f64 {
        self.phase - std::f64::consts::FRAC_PI_2
    }
}

/// Model paired with a drive, as seen by the propagator. Controls: [x];
/// noise: [δx, δE_Z].
struct Driven<'a>(&'a SingleQubitModel);

impl HamiltonianModel for Driven<'_> {
    fn dim(&self) -> usize {
        4
    }
    fn noise_parameters(&self) -> usize {
        2
    }
    fn hamiltonian(&self, _t: f64, controls: &[f64], noise: &[f64]) -> CMat {
        self.0.hamiltonian_at(controls[0] + noise[0], noise[1])
    }
}

/// exp(−iθ/2·(cos a·σx + sin a·σy)) in the [↑, ↓] basis.
pub fn xy_rotation(angle: f64, axis: f64) -> CMat {
    let (s, co) = (0.5 * angle).sin_cos();
    let e = Complex64::from_polar(1.0, axis);
    let mi = Complex64::new(0.0, -1.0);
    CMat::from_row_slice(2, 2, &[c(co), mi * s * e.conj(), mi * s * e, c(co)])
}

/// Spin block of `u` in the frame rotating at the drive frequency.
fn rotating_frame(u: &CMat, sub: &Subspace, drive: &EdsrDrive) -> CMat {
    let phi = std::f64::consts::PI * drive.frequency * drive.duration;
    let mut block = sub.basis.adjoint() * u * &sub.basis;
    let r = [Complex64::from_polar(1.0, phi), Complex64::from_polar(1.0, -phi)];
    for i in 0..2 {
        for j in 0..2 {
            block[(i, j)] *= r[i];
        }
    }
    block
}

fn edsr_opts() -> PropagateOptions {
    PropagateOptions { allow_coarse_steps: true, ..Default::default() }
}

/// Propagate the drive and return the rotating-frame computational block
/// and the full propagator.
pub fn edsr_propagator(model: &SingleQubitModel, drive: &EdsrDrive, noise: &NoiseDraw) -> Result<(CMat, CMat)> {
    model.check_domain(model.x0 - drive.amplitude - 1.0, model.x0 + drive.amplitude + 1.0)?;
    let (sub, _) = model.computational_subspace()?;
    let u = crate::qdyn::propagate(&Driven(model), &drive.pulse(model.x0)?, noise, &edsr_opts())?;
    Ok((rotating_frame(&u, &sub, drive), u))
}

/// Score the drive against the rotation by `angle` about the drive axis.
///
/// Step exponentials are exact for the piecewise-constant trajectory, so the
/// valley splitting does not limit `drive.dt`; accuracy is set by how well the
/// steps resolve the drive period.
pub fn simulate_edsr(
    model: &SingleQubitModel,
    drive: &EdsrDrive,
    angle: f64,
    noise: &EdsrNoise,
    shots: usize,
    seed: SeedSpec,
) -> Result<FidelityReport> {
    model.check_domain(model.x0 - drive.amplitude - 1.0, model.x0 + drive.amplitude + 1.0)?;
    let (sub, _) = model.computational_subspace()?;
    let target = xy_rotation(angle, drive.axis_angle());
    let two = Subspace::from_indices(2, &[0, 1])?;
    let pulse = drive.pulse(model.x0)?;
    let values = monte_carlo_map(&Driven(model), &pulse, &noise.channels(), shots, seed, &edsr_opts(), |u| {
        // the block is sub-unitary when population leaves the lower valley
        process_fidelity_with_leakage(&rotating_frame(u, &sub, drive), &target, &two)
    })?;
    Ok(FidelityReport::from_shots(&values, seed, false))
}

/// Rotating-frame computational blocks of `shots` noisy realizations.
pub fn edsr_blocks(
    model: &SingleQubitModel,
    drive: &EdsrDrive,
    noise: &EdsrNoise,
    shots: usize,
    seed: SeedSpec,
) -> Result<Vec<CMat>> {
    model.check_domain(model.x0 - drive.amplitude - 1.0, model.x0 + drive.amplitude + 1.0)?;
    let (sub, _) = model.computational_subspace()?;
    let pulse = drive.pulse(model.x0)?;
    monte_carlo_map(&Driven(model), &pulse, &noise.channels(), shots, seed, &edsr_opts(), |u| {
        Ok(rotating_frame(u, &sub, drive))
    })
}

/// Tune drive frequency and amplitude (noiseless) for the rotation `angle`.
pub fn calibrate_edsr(
    model: &SingleQubitModel,
    start: &EdsrDrive,
    angle: f64,
    budget: usize,
) -> Result<(EdsrDrive, f64)> {
    let quiet = EdsrNoise::default();
    let linewidth = 1.0 / start.duration;
    let with = |p: &[f64]| EdsrDrive {
        frequency: start.frequency + p[0] * linewidth,
        amplitude: start.amplitude * p[1],
        ..*start
    };
    let objective = |p: &[f64]| match simulate_edsr(model, &with(p), angle, &quiet, 1, SeedSpec::new(0)) {
        Ok(r) => 1.0 - r.fidelity,
        Err(_) => f64::INFINITY,
    };
    // coarse scan in linewidths; the start may sit off resonance
    let f0 = (-6..=6)
        .map(|k| k as f64)
        .map(|k| (k, objective(&[k, 1.0])))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(0.0, |(k, _)| k);
    let opts = OptimizeOptions { budget, initial_step: Some(vec![0.3, 0.05]), f_tol: 1e-10, x_tol: 1e-6 };
    let res = optimize_pulse(objective, &[f0, 1.0], &[(-10.0, 10.0), (0.5, 1.5)], &opts)?;
    Ok((with(&res.params), 1.0 - res.value))
}

/// Rabi frequency (GHz) from the spin-flip probability of a resonant,
/// rectangular drive: the first maximum of P(↑→↓) located by parabolic
/// refinement on a time grid.
pub fn measure_rabi_frequency(model: &SingleQubitModel, amplitude: f64, samples: usize) -> Result<f64> {
    let probe = EdsrDrive::resonant(model, 2.0 * std::f64::consts::PI, amplitude, Envelope::Rectangular)?;
    let t_max = probe.duration;
    let (sub, _) = model.computational_subspace()?;
    let drive = EdsrDrive { duration: t_max, ..probe };
    model.check_domain(model.x0 - amplitude - 1.0, model.x0 + amplitude + 1.0)?;
    // one propagation, recording P(↓) after each step
    let pulse = drive.pulse(model.x0)?;
    let up = sub.basis.column(0).into_owned();
    let down = sub.basis.column(1).into_owned();
    let mut psi = up.clone();
    let stride = (pulse.steps() / samples.max(8)).max(1);
    let mut trace = Vec::new();
    for k in 0..pulse.steps() {
        let h = model.hamiltonian_at(pulse.controls[k][0], 0.0);
        let (e, _) = crate::qdyn::expm_hermitian(&h, pulse.dt);
        psi = e * psi;
        if (k + 1) % stride == 0 {
            trace.push(((k + 1) as f64 * pulse.dt, down.dotc(&psi).norm_sqr()));
        }
    }
    let (i, _) = trace
        .iter()
        .enumerate()
        .filter(|(_, p)| p.0 < 0.75 * t_max)
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .ok_or_else(|| Error::InvalidParameter("too few samples".into()))?;
    if i == 0 || i + 1 >= trace.len() {
        return Err(Error::InvalidParameter("Rabi maximum at the edge of the window".into()));
    }
    let (t0, p0) = trace[i - 1];
    let (t1, p1) = trace[i];
    let (_, p2) = trace[i + 1];
    let h = t1 - t0;
    let den = p0 - 2.0 * p1 + p2;
    let t_peak = if den < 0.0 { t1 + 0.5 * h * (p0 - p2) / den } else { t1 };
    // first full flip after half a Rabi period
    Ok(1.0 / (2.0 * t_peak))
}
