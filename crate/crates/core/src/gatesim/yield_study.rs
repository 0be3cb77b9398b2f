use serde::{Deserialize, Serialize};

use super::edsr::{calibrate_edsr, simulate_edsr, EdsrDrive, EdsrNoise, Envelope, SingleQubitModel};
use super::valley::sample_valley_field;
use crate::physcore::{derive_stream, SeedSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YieldOptions {
    pub ensemble: usize,
    pub threshold: f64,
    /// ⟨E_VS⟩ of the drawn fields (μeV).
    pub mean_splitting: f64,
    pub correlation_length: f64,
    /// Extent of each drawn valley field (nm).
    pub zone: [f64; 2],
    pub grid_spacing: f64,
    /// Rest positions tried per draw; the best one counts.
    pub candidate_positions: Vec<f64>,
    pub angle: f64,
    pub amplitude: f64,
    pub envelope: Envelope,
    pub calibration_budget: usize,
    pub noise: EdsrNoise,
    /// Monte Carlo shots per draw; 0 scores the noiseless calibrated gate.
    pub shots: usize,
}

impl Default for YieldOptions {
    fn default() -> Self {
        Self {
            ensemble: 100,
            threshold: 0.999,
            mean_splitting: 100.0,
            correlation_length: 20.0,
            zone: [-150.0, 150.0],
            grid_spacing: 1.0,
            candidate_positions: vec![0.0],
            angle: std::f64::consts::FRAC_PI_2,
            amplitude: 10.0,
            envelope: Envelope::Hann,
            calibration_budget: 40,
            noise: EdsrNoise::default(),
            shots: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldReport {
    pub fraction: f64,
    pub successes: usize,
    pub ensemble: usize,
    /// 95% Wilson score interval.
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// Best fidelity per draw.
    pub fidelities: Vec<f64>,
    /// Chosen rest position per draw.
    pub positions: Vec<f64>,
}

/// Wilson score interval for `k` successes out of `n` at normal quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let den = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / den;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / den;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Gate fidelity of one model after drive calibration.
pub fn calibrated_fidelity(model: &SingleQubitModel, opts: &YieldOptions, seed: SeedSpec) -> Result<f64> {
    let start = EdsrDrive::resonant(model, opts.angle, opts.amplitude, opts.envelope)?;
    let (drive, f) = calibrate_edsr(model, &start, opts.angle, opts.calibration_budget)?;
    if opts.shots == 0 {
        return Ok(f);
    }
    Ok(simulate_edsr(model, &drive, opts.angle, &opts.noise, opts.shots, seed)?.fidelity)
}

/// Fraction of valley-field draws whose calibrated single-qubit gate beats
/// the threshold. Draw `k` uses `derive_stream(seed, k)`.
pub fn valley_yield(base: &SingleQubitModel, opts: &YieldOptions, seed: SeedSpec) -> Result<YieldReport> {
    if opts.ensemble < 20 {
        return Err(Error::InvalidParameter("yield ensembles need at least 20 draws".into()));
    }
    if opts.candidate_positions.is_empty() {
        return Err(Error::InvalidParameter("at least one candidate position is required".into()));
    }
    let mut fidelities = Vec::with_capacity(opts.ensemble);
    let mut positions = Vec::with_capacity(opts.ensemble);
    for k in 0..opts.ensemble {
        let draw_seed = derive_stream(seed, k as u64);
        let valley = sample_valley_field(
            opts.mean_splitting,
            opts.correlation_length,
            opts.zone[0],
            opts.zone[1],
            opts.grid_spacing,
            draw_seed,
        )?;
        let mut best = (f64::NEG_INFINITY, opts.candidate_positions[0]);
        for &x0 in &opts.candidate_positions {
            let model = SingleQubitModel { valley: valley.clone(), x0, ..base.clone() };
            let f = calibrated_fidelity(&model, opts, derive_stream(draw_seed, 1))?;
            if f > best.0 {
                best = (f, x0);
            }
            if f > opts.threshold {
                break;
            }
        }
        fidelities.push(best.0);
        positions.push(best.1);
    }
    let successes = fidelities.iter().filter(|&&f| f > opts.threshold).count();
    let (wilson_low, wilson_high) = wilson_interval(successes, opts.ensemble, 1.959_963_985);
    Ok(YieldReport {
        fraction: successes as f64 / opts.ensemble as f64,
        successes,
        ensemble: opts.ensemble,
        wilson_low,
        wilson_high,
        fidelities,
        positions,
    })
}
