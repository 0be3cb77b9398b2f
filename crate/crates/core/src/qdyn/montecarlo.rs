use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::fidelity::{process_fidelity_with_leakage, Subspace};
use super::propagate::{propagate, CMat, HamiltonianModel, PropagateOptions, Pulse};
use crate::physcore::{compensated_sum, derive_stream, SeedSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    /// Constant offset per shot, Normal(0, sigma).
    Quasistatic { sigma: f64 },
    /// Independent per-step offsets with one-sided PSD `psd` (units²/GHz).
    White { psd: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseChannel {
    /// Index into the model's noise parameter vector.
    pub target: usize,
    #[serde(flatten)]
    pub kind: NoiseKind,
}

impl NoiseChannel {
    pub fn quasistatic(target: usize, sigma: f64) -> Self {
        Self { target, kind: NoiseKind::Quasistatic { sigma } }
    }

    pub fn white(target: usize, psd: f64) -> Self {
        Self { target, kind: NoiseKind::White { psd } }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match self.kind {
            NoiseKind::Quasistatic { sigma } => sigma,
            NoiseKind::White { psd } => psd,
        };
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise amplitude {v} on parameter {}", self.target)));
        }
        Ok(())
    }

    fn is_silent(&self) -> bool {
        match self.kind {
            NoiseKind::Quasistatic { sigma } => sigma == 0.0,
            NoiseKind::White { psd } => psd == 0.0,
        }
    }
}

/// One shot's noise realization.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseDraw {
    None,
    /// The same offsets on every step.
    Static(Vec<f64>),
    /// `steps × params` row-major offsets.
    Trace {
        params: usize,
        values: Vec<f64>,
    },
}

impl NoiseDraw {
    pub fn fill(&self, step: usize, out: &mut [f64]) {
        match self {
            NoiseDraw::None => out.iter_mut().for_each(|v| *v = 0.0),
            NoiseDraw::Static(v) => {
                for (o, x) in out.iter_mut().zip(v.iter().chain(std::iter::repeat(&0.0))) {
                    *o = *x;
                }
            }
            NoiseDraw::Trace { params, values } => {
                let row = &values[step * params..(step + 1) * params];
                for (o, x) in out.iter_mut().zip(row.iter().chain(std::iter::repeat(&0.0))) {
                    *o = *x;
                }
            }
        }
    }

    /// Draw quasistatic offsets first (in channel order), then the white
    /// increments step by step.
    pub fn sample<R: Rng>(channels: &[NoiseChannel], params: usize, pulse: &Pulse, rng: &mut R) -> Result<Self> {
        for c in channels {
            c.validate()?;
            if c.target >= params {
                return Err(Error::Dimension(format!(
                    "noise channel targets parameter {} but the model has {params}",
                    c.target
                )));
            }
        }
        let active: Vec<&NoiseChannel> = channels.iter().filter(|c| !c.is_silent()).collect();
        if active.is_empty() {
            return Ok(NoiseDraw::None);
        }
        let mut offsets = vec![0.0; params];
        for c in &active {
            if let NoiseKind::Quasistatic { sigma } = c.kind {
                offsets[c.target] += sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let white: Vec<(usize, f64)> = active
            .iter()
            .filter_map(|c| match c.kind {
                NoiseKind::White { psd } => Some((c.target, (psd / (2.0 * pulse.dt)).sqrt())),
                _ => None,
            })
            .collect();
        if white.is_empty() {
            return Ok(NoiseDraw::Static(offsets));
        }
        let steps = pulse.steps();
        let mut values = Vec::with_capacity(steps * params);
        for _ in 0..steps {
            let base = values.len();
            values.extend_from_slice(&offsets);
            for &(t, std) in &white {
                values[base + t] += std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(NoiseDraw::Trace { params, values })
    }
}

/// Mean and standard error of per-shot values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotStats {
    pub mean: f64,
    pub stderr: f64,
    pub shots: usize,
}

impl ShotStats {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        let stderr = if n > 1 {
            let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr, shots: n }
    }
}

/// Propagate `shots` noise realizations and map each propagator through `f`.
/// Shot `k` draws from `derive_stream(seed, k)`, so results do not depend on
/// evaluation order. Noiseless runs propagate once.
pub fn monte_carlo_map<T: Clone, F: FnMut(&CMat) -> Result<T>>(
    model: &dyn HamiltonianModel,
    pulse: &Pulse,
    channels: &[NoiseChannel],
    shots: usize,
    seed: SeedSpec,
    opts: &PropagateOptions,
    mut f: F,
) -> Result<Vec<T>> {
    if shots == 0 {
        return Err(Error::InvalidParameter("at least one shot is required".into()));
    }
    let params = model.noise_parameters();
    let has_white = channels.iter().any(|c| matches!(c.kind, NoiseKind::White { psd } if psd > 0.0));
    if has_white && !opts.allow_coarse_steps {
        propagate(model, pulse, &NoiseDraw::None, opts)?;
    }
    let mut out: Vec<T> = Vec::with_capacity(shots);
    for k in 0..shots {
        let mut rng = derive_stream(seed, k as u64).rng();
        let draw = NoiseDraw::sample(channels, params, pulse, &mut rng)?;
        if draw == NoiseDraw::None && k > 0 {
            out.push(out[0].clone());
            continue;
        }
        let u = propagate(model, pulse, &draw, opts)?;
        out.push(f(&u)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub leakage: f64,
    pub stderr: f64,
    pub shots: usize,
    pub seed: SeedSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_shot: Option<Vec<f64>>,
}

impl FidelityReport {
    pub fn from_shots(values: &[(f64, f64)], seed: SeedSpec, keep_per_shot: bool) -> Self {
        let f: Vec<f64> = values.iter().map(|v| v.0).collect();
        let l: Vec<f64> = values.iter().map(|v| v.1).collect();
        let fs = ShotStats::from_values(&f);
        Self {
            fidelity: fs.mean,
            leakage: ShotStats::from_values(&l).mean,
            stderr: fs.stderr,
            shots: fs.shots,
            seed,
            per_shot: keep_per_shot.then_some(f),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    /// Lower confidence bound used by pass/fail checks: mean − 3·stderr.
    pub fn lower_bound(&self) -> f64 {
        self.fidelity - 3.0 * self.stderr
    }
}

#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_fidelity(
    model: &dyn HamiltonianModel,
    pulse: &Pulse,
    channels: &[NoiseChannel],
    target: &CMat,
    subspace: &Subspace,
    shots: usize,
    seed: SeedSpec,
    opts: &PropagateOptions,
) -> Result<FidelityReport> {
    let values = monte_carlo_map(model, pulse, channels, shots, seed, opts, |u| {
        process_fidelity_with_leakage(u, target, subspace)
    })?;
    Ok(FidelityReport::from_shots(&values, seed, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physcore::HBAR_UEV_NS;
    use crate::qdyn::pauli;
    use num_complex::Complex64;

    /// H = (δ + noise)·σz/2.
    struct Precession;

    impl HamiltonianModel for Precession {
        fn dim(&self) -> usize {
            2
        }
        fn noise_parameters(&self) -> usize {
            1
        }
        fn hamiltonian(&self, _t: f64, _c: &[f64], n: &[f64]) -> CMat {
            pauli(3) * Complex64::new(n[0] / 2.0, 0.0)
        }
    }

    fn coherence(u: &CMat) -> Result<f64> {
        Ok((u[(0, 0)] * u[(1, 1)].conj()).re)
    }

    fn mean_coherence(channels: &[NoiseChannel], t: f64, dt: f64, shots: usize) -> f64 {
        let p = Pulse::idle(t, dt).unwrap();
        let v = monte_carlo_map(&Precession, &p, channels, shots, SeedSpec::new(42), &Default::default(), coherence)
            .unwrap();
        ShotStats::from_values(&v).mean
    }

    #[test]
    fn quasistatic_ramsey_decay() {
        let sigma = 0.1;
        let t = 1.4 * HBAR_UEV_NS / sigma;
        let expected = (-(sigma * t / HBAR_UEV_NS).powi(2) / 2.0).exp();
        let got = mean_coherence(&[NoiseChannel::quasistatic(0, sigma)], t, 0.1, 10_000);
        assert!((got - expected).abs() / expected < 0.02, "{got} vs {expected}");
    }

    #[test]
    fn white_noise_dephasing() {
        let t = 20.0;
        let psd = 2.0 * HBAR_UEV_NS * HBAR_UEV_NS / t;
        let expected = (-psd * t / (4.0 * HBAR_UEV_NS * HBAR_UEV_NS)).exp();
        let got = mean_coherence(&[NoiseChannel::white(0, psd)], t, 0.05, 10_000);
        assert!((got - expected).abs() / expected < 0.02, "{got} vs {expected}");
    }

    #[test]
    fn silent_channels_reduce_to_deterministic_result() {
        let p = Pulse::idle(5.0, 0.1).unwrap();
        let s = Subspace::from_indices(2, &[0, 1]).unwrap();
        let chans = [NoiseChannel::quasistatic(0, 0.0), NoiseChannel::white(0, 0.0)];
        let r = monte_carlo_fidelity(
            &Precession,
            &p,
            &chans,
            &CMat::identity(2, 2),
            &s,
            50,
            SeedSpec::new(1),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(r.stderr, 0.0);
        assert!((r.fidelity - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let p = Pulse::idle(5.0, 0.1).unwrap();
        let s = Subspace::from_indices(2, &[0, 1]).unwrap();
        let chans = [NoiseChannel::quasistatic(0, 0.3), NoiseChannel::white(0, 0.01)];
        let run = |seed| {
            monte_carlo_fidelity(
                &Precession,
                &p,
                &chans,
                &CMat::identity(2, 2),
                &s,
                200,
                SeedSpec::new(seed),
                &Default::default(),
            )
            .unwrap()
        };
        let (a, b) = (run(7), run(7));
        assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        assert_ne!(run(8).fidelity.to_bits(), a.fidelity.to_bits());
        let back: FidelityReport = toml::from_str(&a.to_toml()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn stderr_shrinks_with_shots() {
        let p = Pulse::idle(5.0, 0.05).unwrap();
        let s = Subspace::from_indices(2, &[0, 1]).unwrap();
        let chans = [NoiseChannel::quasistatic(0, 0.3)];
        let run = |shots| {
            monte_carlo_fidelity(
                &Precession,
                &p,
                &chans,
                &CMat::identity(2, 2),
                &s,
                shots,
                SeedSpec::new(5),
                &Default::default(),
            )
            .unwrap()
            .stderr
        };
        let ratio = run(4000) / run(8000);
        assert!((ratio - 2f64.sqrt()).abs() / 2f64.sqrt() < 0.1, "{ratio}");
    }

    #[test]
    fn channel_target_must_exist() {
        let p = Pulse::idle(1.0, 0.1).unwrap();
        let mut rng = SeedSpec::new(0).rng();
        assert!(NoiseDraw::sample(&[NoiseChannel::white(3, 1.0)], 1, &p, &mut rng).is_err());
        assert!(NoiseDraw::sample(&[NoiseChannel::white(0, -1.0)], 1, &p, &mut rng).is_err());
    }
}
