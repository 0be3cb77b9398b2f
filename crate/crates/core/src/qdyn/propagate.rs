use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::montecarlo::NoiseDraw;
use crate::physcore::HBAR_UEV_NS;
use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Time-dependent Hermitian generator in μeV.
///
/// `controls` are the pulse values of the current step and `noise` holds one
/// value per noise parameter (zero when noiseless).
pub trait HamiltonianModel {
    fn dim(&self) -> usize;

    /// Number of noise parameters the generator reads from `noise`.
    fn noise_parameters(&self) -> usize {
        0
    }

    fn hamiltonian(&self, t: f64, controls: &[f64], noise: &[f64]) -> CMat;
}

/// Piecewise-constant control values on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub dt: f64,
    /// One row of control values per step.
    pub controls: Vec<Vec<f64>>,
}

impl Pulse {
    pub fn new(dt: f64, controls: Vec<Vec<f64>>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step {dt}")));
        }
        Ok(Self { dt, controls })
    }

    /// Steps of no more than `max_dt` covering `duration`, with each step's
    /// controls taken from `f` at the step midpoint.
    pub fn sample<F: FnMut(f64) -> Vec<f64>>(duration: f64, max_dt: f64, mut f: F) -> Result<Self> {
        if !(duration > 0.0 && max_dt > 0.0) {
            return Err(Error::InvalidParameter(format!("pulse duration {duration}, step {max_dt}")));
        }
        let n = (duration / max_dt).ceil().max(1.0) as usize;
        let dt = duration / n as f64;
        let controls = (0..n).map(|k| f((k as f64 + 0.5) * dt)).collect();
        Self::new(dt, controls)
    }

    /// A control-free pulse of `n` steps.
    pub fn idle(duration: f64, max_dt: f64) -> Result<Self> {
        Self::sample(duration, max_dt, |_| Vec::new())
    }

    pub fn steps(&self) -> usize {
        self.controls.len()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps() as f64
    }

    /// Midpoint of step `k`.
    pub fn time(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    /// Largest allowed Δt·(λ_max − λ_min)/ħ per step (rad).
    pub max_phase_per_step: f64,
    /// Skip the step-size check. Steps are exact exponentials, so this only
    /// trades the resolution guarantee for speed on piecewise-constant models.
    pub allow_coarse_steps: bool,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self { max_phase_per_step: 0.2, allow_coarse_steps: false }
    }
}

/// exp(−i·H·τ/ħ) for Hermitian `h`, plus the spectral spread of `h`.
pub fn expm_hermitian(h: &CMat, tau: f64) -> (CMat, f64) {
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (j, &lam) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lam * tau / HBAR_UEV_NS);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    let (lo, hi) = eig.eigenvalues.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    (scaled * q.adjoint(), hi - lo)
}

fn check_hermitian(h: &CMat, dim: usize) -> Result<()> {
    if h.nrows() != dim || h.ncols() != dim {
        return Err(Error::Dimension(format!(
            "generator returned {}×{}, model dimension is {dim}",
            h.nrows(),
            h.ncols()
        )));
    }
    Ok(())
}

/// Time-ordered product of step exponentials. Consecutive identical
/// Hamiltonians reuse the previous step's exponential.
///
/// The step-size guard is skipped for [`NoiseDraw::Trace`] draws; check the
/// noiseless pulse once instead (as [`super::monte_carlo_map`] does).
pub fn propagate(
    model: &dyn HamiltonianModel,
    pulse: &Pulse,
    noise: &NoiseDraw,
    opts: &PropagateOptions,
) -> Result<CMat> {
    let d = model.dim();
    propagate_with(model, pulse, noise, opts, CMat::identity(d, d))
}

/// Evolve a state vector; cheaper than forming the propagator when only one
/// input state matters.
pub fn propagate_state(
    model: &dyn HamiltonianModel,
    pulse: &Pulse,
    noise: &NoiseDraw,
    psi: &DVector<Complex64>,
    opts: &PropagateOptions,
) -> Result<DVector<Complex64>> {
    let u = propagate_with(model, pulse, noise, opts, CMat::from_column_slice(psi.len(), 1, psi.as_slice()))?;
    Ok(DVector::from_column_slice(u.as_slice()))
}

fn propagate_with(
    model: &dyn HamiltonianModel,
    pulse: &Pulse,
    noise: &NoiseDraw,
    opts: &PropagateOptions,
    mut state: CMat,
) -> Result<CMat> {
    let d = model.dim();
    if state.nrows() != d {
        return Err(Error::Dimension(format!("state has {} rows, model dimension is {d}", state.nrows())));
    }
    let mut prev: Option<(CMat, CMat)> = None;
    let mut nbuf = vec![0.0; model.noise_parameters()];
    // per-step white-noise increments are integrated exactly; the resolution
    // guard applies to the deterministic generator (checked by the caller)
    let guard = !opts.allow_coarse_steps && !matches!(noise, NoiseDraw::Trace { .. });
    for k in 0..pulse.steps() {
        noise.fill(k, &mut nbuf);
        let h = model.hamiltonian(pulse.time(k), &pulse.controls[k], &nbuf);
        if k == 0 {
            check_hermitian(&h, d)?;
        }
        let step = match &prev {
            Some((hp, ep)) if *hp == h => ep.clone(),
            _ => {
                let (e, spread) = expm_hermitian(&h, pulse.dt);
                let phase = spread * pulse.dt / HBAR_UEV_NS;
                if guard && phase > opts.max_phase_per_step {
                    return Err(Error::StepTooCoarse { step: k, phase, limit: opts.max_phase_per_step });
                }
                prev = Some((h, e.clone()));
                e
            }
        };
        state = step * state;
    }
    Ok(state)
}

/// Pauli matrices: 0 → identity, 1 → σx, 2 → σy, 3 → σz.
pub fn pauli(k: usize) -> CMat {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let v = match k {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -i, i, z],
        3 => [o, z, z, -o],
        _ => panic!("Pauli index {k} out of range"),
    };
    CMat::from_row_slice(2, 2, &v)
}
