//! Monte Carlo dephasing of a precessing spin against the closed-form decays
//! for quasistatic and white detuning noise.

use num_complex::Complex64;
use spinbus::physcore::{SeedSpec, HBAR_UEV_NS};
use spinbus::qdyn::*;

/// H = noise·σz/2.
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

fn coherence(channel: NoiseChannel, t: f64, dt: f64) -> spinbus::Result<f64> {
    let pulse = Pulse::idle(t, dt)?;
    let v = monte_carlo_map(&Precession, &pulse, &[channel], 10_000, SeedSpec::new(42), &Default::default(), |u| {
        Ok((u[(0, 0)] * u[(1, 1)].conj()).re)
    })?;
    Ok(ShotStats::from_values(&v).mean)
}

fn main() -> spinbus::Result<()> {
    let sigma = 0.1;
    let t = 1.4 * HBAR_UEV_NS / sigma;
    let expect = (-(sigma * t / HBAR_UEV_NS).powi(2) / 2.0).exp();
    let got = coherence(NoiseChannel::quasistatic(0, sigma), t, 0.1)?;
    println!("quasistatic: {got:.4} vs {expect:.4}");

    let t = 20.0;
    let psd = 2.0 * HBAR_UEV_NS * HBAR_UEV_NS / t;
    let expect = (-psd * t / (4.0 * HBAR_UEV_NS * HBAR_UEV_NS)).exp();
    let got = coherence(NoiseChannel::white(0, psd), t, 0.05)?;
    println!("white:       {got:.4} vs {expect:.4}");
    Ok(())
}
