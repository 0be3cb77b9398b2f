use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::physcore::{SeedSpec, UnitSystem};
use crate::qdyn::{
    monte_carlo_map, optimize_pulse, CMat, FidelityReport, HamiltonianModel, NoiseChannel, OptimizeOptions,
    PropagateOptions, Pulse,
};
use crate::{Error, Result};

/// Singlet-triplet model in the basis {T₀, S, T₋}. Energies in μeV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitReadoutModel {
    /// Mean Zeeman energy.
    pub b_par: f64,
    /// Zeeman difference between the dots along the field.
    pub delta_b_par: f64,
    /// Transverse Zeeman difference.
    pub delta_b_perp: f64,
    /// Exchange at ε = 0.
    pub j0: f64,
    /// Detuning scale of the exponential exchange law.
    pub eps0: f64,
    pub noise: InitNoise,
}

/// Detuning noise (μeV, after the lever arm).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitNoise {
    /// One-sided white PSD on ε (μeV²/GHz).
    pub white_psd: f64,
    pub quasistatic_sigma: f64,
}

impl InitReadoutModel {
    /// Model from fields in mT, with J(ε) = 1 μeV·exp(ε/50 μeV).
    pub fn from_fields(units: &UnitSystem, b_par_mt: f64, delta_b_par_mt: f64, delta_b_perp_mt: f64) -> Self {
        Self {
            b_par: units.field_to_energy(b_par_mt),
            delta_b_par: units.field_to_energy(delta_b_par_mt),
            delta_b_perp: units.field_to_energy(delta_b_perp_mt),
            j0: 1.0,
            eps0: 50.0,
            noise: InitNoise::default(),
        }
    }

    /// Detuning at which J equals `j`.
    pub fn epsilon_for_j(&self, j: f64) -> f64 {
        self.eps0 * (j / self.j0).ln()
    }

    /// Detuning of the S–T₋ crossing (J = B_∥).
    pub fn crossing(&self) -> f64 {
        self.epsilon_for_j(self.b_par)
    }

    pub fn hamiltonian_at(&self, eps: f64) -> CMat {
        let j = j_of_epsilon(self, eps);
        let c = |v: f64| Complex64::new(v, 0.0);
        let a = self.delta_b_par / 2.0;
        let b = self.delta_b_perp / (2.0 * std::f64::consts::SQRT_2);
        CMat::from_row_slice(3, 3, &[c(0.0), c(a), c(0.0), c(a), c(-j), c(b), c(0.0), c(b), c(-self.b_par)])
    }

    fn channels(&self) -> Vec<NoiseChannel> {
        vec![NoiseChannel::white(0, self.noise.white_psd), NoiseChannel::quasistatic(0, self.noise.quasistatic_sigma)]
    }
}

impl HamiltonianModel for InitReadoutModel {
    fn dim(&self) -> usize {
        3
    }

    fn noise_parameters(&self) -> usize {
        1
    }

    /// controls: [ε]; noise: [δε].
    fn hamiltonian(&self, _t: f64, controls: &[f64], noise: &[f64]) -> CMat {
        self.hamiltonian_at(controls[0] + noise[0])
    }
}

/// J(ε) = J₀·exp(ε/ε₀).
pub fn j_of_epsilon(model: &InitReadoutModel, eps: f64) -> f64 {
    model.j0 * (eps / model.eps0).exp()
}

/// Detuning window skipped instantaneously during the ramp (`lower < upper`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpWindow {
    pub upper: f64,
    pub lower: f64,
}

/// Linear detuning ramp from `eps_start` (large J) to `eps_end` (small J).
/// A jump window is cut out of the ramp; the remaining detuning range is swept
/// at a uniform rate so the total duration is unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitRamp {
    pub eps_start: f64,
    pub eps_end: f64,
    pub duration: f64,
    pub dt: f64,
    pub jump: Option<JumpWindow>,
}

impl InitRamp {
    /// Ramp from J = 10·B_∥ down to J = ΔB_∥/100 with a jump of a factor
    /// of two either side of the S–T₋ crossing.
    pub fn for_model(model: &InitReadoutModel, duration: f64) -> Self {
        let x = model.crossing();
        let half = model.eps0 * 2f64.ln();
        Self {
            eps_start: model.epsilon_for_j(10.0 * model.b_par.max(model.delta_b_par)),
            eps_end: model.epsilon_for_j(0.01 * model.delta_b_par.abs().max(1e-6)),
            duration,
            dt: 0.05,
            jump: Some(JumpWindow { upper: x + half, lower: x - half }),
        }
    }

    pub fn validate(&self, model: &InitReadoutModel) -> Result<()> {
        if !(self.eps_start > self.eps_end) {
            return Err(Error::InvalidParameter("ramp must decrease the detuning".into()));
        }
        if !(self.duration >= 0.0 && self.dt > 0.0) {
            return Err(Error::InvalidParameter("ramp duration and step must be positive".into()));
        }
        if let Some(w) = self.jump {
            let x = model.crossing();
            if !(x < self.eps_start && x > self.eps_end) {
                return Err(Error::OutOfDomain(format!(
                    "ramp [{}, {}] does not contain the S–T₋ crossing at {x:.2}",
                    self.eps_end, self.eps_start
                )));
            }
            if !(w.lower < w.upper && w.upper <= self.eps_start && w.lower >= self.eps_end) {
                return Err(Error::OutOfDomain("jump window must lie inside the ramp".into()));
            }
        }
        Ok(())
    }

    /// Detuning at ramp time `t`.
    pub fn epsilon(&self, t: f64) -> f64 {
        let skipped = self.jump.map_or(0.0, |w| w.upper - w.lower);
        let swept = self.eps_start - self.eps_end - skipped;
        let e = self.eps_start - swept * (t / self.duration).clamp(0.0, 1.0);
        match self.jump {
            Some(w) if e <= w.upper => e - skipped,
            _ => e,
        }
    }

    /// Piecewise-constant forward pulse; `reverse` plays it backwards.
    pub fn pulse(&self, reverse: bool) -> Result<Pulse> {
        if self.duration == 0.0 {
            return Pulse::new(self.dt, Vec::new());
        }
        Pulse::sample(self.duration, self.dt, |t| {
            let tt = if reverse { self.duration - t } else { t };
            vec![self.epsilon(tt)]
        })
    }
}

fn ket(v: [f64; 3]) -> DVector<Complex64> {
    DVector::from_iterator(3, v.iter().map(|&x| Complex64::new(x, 0.0)))
}

/// |↓↑⟩ = (S − T₀)/√2 in {T₀, S, T₋} for ΔB_∥ > 0; the sign flips with ΔB_∥.
fn target_state(model: &InitReadoutModel) -> DVector<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if model.delta_b_par >= 0.0 {
        ket([-s, s, 0.0])
    } else {
        ket([s, s, 0.0])
    }
}

fn run(
    model: &InitReadoutModel,
    ramp: &InitRamp,
    reverse: bool,
    shots: usize,
    seed: SeedSpec,
) -> Result<FidelityReport> {
    ramp.validate(model)?;
    let pulse = ramp.pulse(reverse)?;
    let singlet = ket([0.0, 1.0, 0.0]);
    let target = target_state(model);
    let (from, to) = if reverse { (&target, &singlet) } else { (&singlet, &target) };
    let score = |u: &CMat| -> (f64, f64) {
        let out = u * from;
        (to.dotc(&out).norm_sqr(), out[2].norm_sqr())
    };
    // the initial state starts in the S/T₀ block; leakage is T₋ population
    let opts = PropagateOptions { allow_coarse_steps: true, ..Default::default() };
    let values = if pulse.steps() == 0 {
        vec![score(&CMat::identity(3, 3)); shots.max(1)]
    } else {
        monte_carlo_map(model, &pulse, &model.channels(), shots, seed, &opts, |u| Ok(score(u)))?
    };
    Ok(FidelityReport::from_shots(&values, seed, false))
}

/// Ramp S(2,0) → |↓↑⟩ and score the final state.
///
/// Steps are exact exponentials of the piecewise-constant detuning, so the
/// per-step phase guard is not applied here; accuracy is governed by `ramp.dt`.
pub fn simulate_init(
    model: &InitReadoutModel,
    ramp: &InitRamp,
    shots: usize,
    seed: SeedSpec,
) -> Result<FidelityReport> {
    run(model, ramp, false, shots, seed)
}

/// The reversed ramp applied to |↓↑⟩, scored against S.
pub fn simulate_readout(
    model: &InitReadoutModel,
    ramp: &InitRamp,
    shots: usize,
    seed: SeedSpec,
) -> Result<FidelityReport> {
    run(model, ramp, true, shots, seed)
}

/// Tune the jump window edges on the noiseless model: a coarse grid over
/// both edge offsets (the landscape oscillates with the dynamical phase),
/// then Nelder-Mead from the best grid point.
pub fn optimize_jump(model: &InitReadoutModel, ramp: &InitRamp, grid: usize, budget: usize) -> Result<(InitRamp, f64)> {
    let x = model.crossing();
    let quiet = InitReadoutModel { noise: InitNoise::default(), ..*model };
    let with = |p: &[f64]| InitRamp { jump: Some(JumpWindow { upper: x + p[0], lower: x - p[1] }), ..*ramp };
    let hi = (ramp.eps_start - x).min(2.5 * model.eps0);
    let lo = (x - ramp.eps_end).min(2.5 * model.eps0);
    if !(hi > 0.0 && lo > 0.0) {
        return Err(Error::OutOfDomain("ramp does not straddle the S–T₋ crossing".into()));
    }
    let objective = |p: &[f64]| match run(&quiet, &with(p), false, 1, SeedSpec::new(0)) {
        Ok(r) => 1.0 - r.fidelity,
        Err(_) => f64::INFINITY,
    };
    let n = grid.max(2);
    let mut start = [0.5 * hi, 0.5 * lo];
    let mut best = f64::INFINITY;
    for i in 0..n {
        for k in 0..n {
            let p = [hi * (i as f64 + 0.5) / n as f64, lo * (k as f64 + 0.5) / n as f64];
            let v = objective(&p);
            if v < best {
                best = v;
                start = p;
            }
        }
    }
    let opts = OptimizeOptions {
        budget,
        initial_step: Some(vec![0.5 * hi / n as f64, 0.5 * lo / n as f64]),
        ..Default::default()
    };
    let res = optimize_pulse(objective, &start, &[(1e-3 * hi, hi), (1e-3 * lo, lo)], &opts)?;
    Ok((with(&res.params), 1.0 - res.value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_model() -> InitReadoutModel {
        InitReadoutModel::from_fields(&UnitSystem::default(), 20.0, 1.0, 0.3)
    }

    #[test]
    fn hamiltonian_entries() {
        let m = InitReadoutModel {
            b_par: 2.0,
            delta_b_par: 0.3,
            delta_b_perp: 0.2,
            j0: 1.5,
            eps0: 10.0,
            noise: InitNoise::default(),
        };
        let h = m.hamiltonian_at(0.0);
        let b = 0.2 / (2.0 * 2f64.sqrt());
        let expected = [[0.0, 0.15, 0.0], [0.15, -1.5, b], [0.0, b, -2.0]];
        for i in 0..3 {
            for k in 0..3 {
                assert!((h[(i, k)].re - expected[i][k]).abs() < 1e-15 && h[(i, k)].im == 0.0);
            }
        }
    }

    #[test]
    fn exchange_law() {
        let m = reference_model();
        assert_eq!(j_of_epsilon(&m, 0.0), m.j0);
        assert!(j_of_epsilon(&m, -1e4) < 1e-50);
        let mut prev = 0.0;
        for k in -50..50 {
            let j = j_of_epsilon(&m, k as f64 * 7.0);
            assert!(j > prev);
            prev = j;
        }
        assert!((j_of_epsilon(&m, m.crossing()) - m.b_par).abs() < 1e-12);
    }

    #[test]
    fn sudden_ramp_gives_one_half() {
        let m = reference_model();
        let ramp = InitRamp { duration: 0.0, jump: None, ..InitRamp::for_model(&m, 0.0) };
        let r = simulate_init(&m, &ramp, 1, SeedSpec::new(0)).unwrap();
        assert!((r.fidelity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn adiabatic_limit_without_transverse_gradient() {
        let mut m = reference_model();
        m.delta_b_perp = 0.0;
        let mut prev = 0.0;
        for d in [1.0, 10.0, 50.0, 200.0, 1000.0] {
            let ramp = InitRamp { jump: None, ..InitRamp::for_model(&m, d) };
            let f = simulate_init(&m, &ramp, 1, SeedSpec::new(0)).unwrap().fidelity;
            assert!(f > prev, "{d}: {f}");
            prev = f;
        }
        assert!(prev > 0.9999);
    }

    #[test]
    fn mirrored_gradient_is_symmetric() {
        let m = reference_model();
        let ramp = InitRamp::for_model(&m, 200.0);
        let mirrored = InitReadoutModel { delta_b_par: -m.delta_b_par, ..m };
        let a = simulate_init(&m, &ramp, 1, SeedSpec::new(0)).unwrap().fidelity;
        let b = simulate_init(&mirrored, &ramp, 1, SeedSpec::new(0)).unwrap().fidelity;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn jump_needs_the_crossing_inside_the_ramp() {
        let m = reference_model();
        let mut ramp = InitRamp::for_model(&m, 200.0);
        ramp.eps_start = m.crossing() - 1.0;
        assert!(matches!(simulate_init(&m, &ramp, 1, SeedSpec::new(0)), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn jump_beats_landau_zener_passage() {
        let m = reference_model();
        let ramp = InitRamp::for_model(&m, 200.0);
        let plain = simulate_init(&m, &InitRamp { jump: None, ..ramp }, 1, SeedSpec::new(0)).unwrap();
        let (tuned, f) = optimize_jump(&m, &ramp, 8, 40).unwrap();
        assert!(f > plain.fidelity && f > 0.999, "{f} vs {}", plain.fidelity);
        let readout = simulate_readout(&m, &tuned, 1, SeedSpec::new(0)).unwrap();
        assert!((readout.fidelity - f).abs() < 1e-9);
    }
}
