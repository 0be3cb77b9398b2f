use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::physcore::SeedSpec;
use crate::{Error, Result};

/// Complex valley coupling Δ_VS sampled on a uniform 1D grid (μeV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValleyField {
    pub x0: f64,
    pub spacing: f64,
    pub values: Vec<Complex64>,
    pub correlation_length: f64,
    /// Target ⟨E_VS⟩ = 2⟨|Δ|⟩ the field was drawn for.
    pub mean_splitting: f64,
    pub seed: SeedSpec,
}

/// Per-component standard deviation giving ⟨|Δ|⟩ = ⟨E_VS⟩/2 for a circular
/// complex Gaussian (Rayleigh mean σ·√(π/2)).
pub fn component_sigma(mean_splitting: f64) -> f64 {
    0.5 * mean_splitting / (std::f64::consts::PI / 2.0).sqrt()
}

impl ValleyField {
    pub fn x_max(&self) -> f64 {
        self.x0 + self.spacing * (self.values.len() - 1) as f64
    }

    /// Linear interpolation of Δ; `None` outside the grid.
    pub fn at(&self, x: f64) -> Option<Complex64> {
        let u = (x - self.x0) / self.spacing;
        let n = self.values.len();
        if !(u >= 0.0 && u <= (n - 1) as f64) {
            return None;
        }
        let i = (u.floor() as usize).min(n - 2);
        let f = u - i as f64;
        Some(self.values[i] * (1.0 - f) + self.values[i + 1] * f)
    }

    /// Constant field over `[x0, x1]`.
    pub fn uniform(delta: Complex64, x0: f64, x1: f64) -> Self {
        Self {
            x0,
            spacing: x1 - x0,
            values: vec![delta, delta],
            correlation_length: f64::INFINITY,
            mean_splitting: 2.0 * delta.norm(),
            seed: SeedSpec::new(0),
        }
    }
}

/// Gaussian-correlated complex field with ⟨Δ(x)Δ*(x+r)⟩ ∝ exp(−r²/2ℓ²),
/// built by convolving white noise with exp(−r²/ℓ²) and normalizing.
/// An infinite correlation length gives a uniform field with one Rayleigh draw.
pub fn sample_valley_field(
    mean_splitting: f64,
    correlation_length: f64,
    x0: f64,
    x1: f64,
    spacing: f64,
    seed: SeedSpec,
) -> Result<ValleyField> {
    if !(spacing > 0.0 && x1 > x0) {
        return Err(Error::InvalidParameter("valley grid needs x1 > x0 and positive spacing".into()));
    }
    if !(correlation_length >= spacing) {
        return Err(Error::InvalidParameter(format!(
            "correlation length {correlation_length} below grid spacing {spacing}"
        )));
    }
    if !(mean_splitting >= 0.0) {
        return Err(Error::InvalidParameter("mean valley splitting must be non-negative".into()));
    }
    let sigma = component_sigma(mean_splitting);
    let mut rng = seed.rng();
    if correlation_length.is_infinite() {
        let d = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * sigma;
        return Ok(ValleyField { mean_splitting, seed, ..ValleyField::uniform(d, x0, x1) });
    }
    let n = ((x1 - x0) / spacing).round() as usize + 1;
    let half = (3.0 * correlation_length / spacing).ceil() as usize;
    let kernel: Vec<f64> = (0..=2 * half)
        .map(|k| {
            let r = (k as f64 - half as f64) * spacing;
            (-(r * r) / (correlation_length * correlation_length)).exp()
        })
        .collect();
    let norm = kernel.iter().map(|k| k * k).sum::<f64>().sqrt();
    let white: Vec<Complex64> =
        (0..n + 2 * half).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let values = (0..n)
        .map(|i| {
            let acc: Complex64 = kernel.iter().zip(&white[i..]).map(|(k, w)| w * *k).sum();
            acc * (sigma / norm)
        })
        .collect();
    Ok(ValleyField { x0, spacing, values, correlation_length, mean_splitting, seed })
}
