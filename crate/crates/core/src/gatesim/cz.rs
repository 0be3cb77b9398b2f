use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::edsr::SingleQubitModel;
use crate::physcore::{SeedSpec, HBAR_UEV_NS};
use crate::qdyn::{
    monte_carlo_map, optimize_pulse, process_fidelity_with_leakage, propagate, CMat, FidelityReport, HamiltonianModel,
    NoiseChannel, NoiseDraw, OptimizeOptions, PropagateOptions, Pulse, Subspace,
};
use crate::{Error, Result};

/// Exchange energy as a function of dot distance (μeV, nm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExchangeLaw {
    /// J = j_ref·exp(−(d − d_ref)/decay).
    Exponential { j_ref: f64, d_ref: f64, decay: f64 },
    /// log J interpolated linearly between samples on increasing d.
    Table { d: Vec<f64>, j: Vec<f64> },
}

impl ExchangeLaw {
    pub fn j(&self, d: f64) -> Option<f64> {
        match self {
            ExchangeLaw::Exponential { j_ref, d_ref, decay } => Some(j_ref * (-(d - d_ref) / decay).exp()),
            ExchangeLaw::Table { d: ds, j } => {
                let n = ds.len();
                if n < 2 || d < ds[0] || d > ds[n - 1] {
                    return None;
                }
                let i = ds.partition_point(|&v| v <= d).clamp(1, n - 1);
                let f = (d - ds[i - 1]) / (ds[i] - ds[i - 1]);
                Some((j[i - 1].ln() * (1.0 - f) + j[i].ln() * f).exp())
            }
        }
    }

    /// Distance at which the law gives `j` (exponential laws only).
    pub fn distance_for(&self, j: f64) -> Option<f64> {
        match self {
            ExchangeLaw::Exponential { j_ref, d_ref, decay } => Some(d_ref - decay * (j / j_ref).ln()),
            ExchangeLaw::Table { d, j: js } => {
                // monotone decreasing tables only
                let lj = j.ln();
                (1..d.len()).find_map(|i| {
                    let (a, b) = (js[i - 1].ln(), js[i].ln());
                    ((a - lj) * (b - lj) <= 0.0 && a != b).then(|| d[i - 1] + (d[i] - d[i - 1]) * (a - lj) / (a - b))
                })
            }
        }
    }
}

/// Symmetric approach–hold–retreat of the dot distance with raised-cosine ramps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistancePulse {
    pub d_far: f64,
    pub d_hold: f64,
    pub ramp: f64,
    pub hold: f64,
    pub dt: f64,
}

impl DistancePulse {
    /// Ramp from J ≈ J_hold/400 to the distance where the law gives `j_hold`,
    /// 1.5 ns raised-cosine ramps and a πħ/J hold.
    pub fn for_hold(model: &TwoQubitModel, j_hold: f64) -> Result<Self> {
        let d_hold = model
            .exchange
            .distance_for(j_hold)
            .ok_or_else(|| Error::OutOfDomain(format!("J = {j_hold} μeV not reached by the exchange law")))?;
        let d_far = model.exchange.distance_for(j_hold / 400.0).unwrap_or(d_hold + 50.0);
        Ok(Self { d_far, d_hold, ramp: 1.5, hold: pi_hold_time(j_hold), dt: 0.05 })
    }

    pub fn duration(&self) -> f64 {
        2.0 * self.ramp + self.hold
    }

    pub fn distance(&self, t: f64) -> f64 {
        let s = |u: f64| 0.5 * (1.0 - (std::f64::consts::PI * u.clamp(0.0, 1.0)).cos());
        let w = if t < self.ramp {
            s(t / self.ramp)
        } else if t <= self.ramp + self.hold {
            1.0
        } else {
            1.0 - s((t - self.ramp - self.hold) / self.ramp)
        };
        self.d_far + (self.d_hold - self.d_far) * w
    }

    pub fn pulse(&self) -> Result<Pulse> {
        Pulse::sample(self.duration(), self.dt, |t| vec![self.distance(t)])
    }
}

/// Two spin⊗valley electrons at `center ∓ d/2` coupled by exchange on spin.
/// Basis index 4·(2s₁ + v₁) + (2s₂ + v₂).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitModel {
    pub q1: SingleQubitModel,
    pub q2: SingleQubitModel,
    pub exchange: ExchangeLaw,
    pub center: f64,
    /// Quasistatic distance noise (nm).
    pub sigma_d: f64,
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Exchange at the hold point giving a CZ in about 50 ns (μeV).
pub const DEFAULT_J_HOLD: f64 = 0.041;

impl TwoQubitModel {
    /// Both dots in a ∂B∥ = 0.1 mT/nm gradient at B∥ = 20 mT, uniform valley
    /// splitting `e_vs` (μeV), the tabulated default J(d) and σ_d = 10 pm.
    pub fn manipulation_zone(e_vs: f64) -> Self {
        let field = super::edsr::SpinField::linear_mt(&crate::physcore::UnitSystem::default(), 20.0, 0.1, 0.0, 0.0);
        let q = SingleQubitModel::uniform(field, Complex64::new(0.5 * e_vs, 0.0), 0.0);
        Self { q1: q.clone(), q2: q, exchange: crate::exchange::default_exchange_law(), center: 0.0, sigma_d: 0.01 }
    }

    pub fn positions(&self, d: f64) -> (f64, f64) {
        (self.center - 0.5 * d, self.center + 0.5 * d)
    }

    pub fn hamiltonian_at(&self, d: f64) -> CMat {
        let (x1, x2) = self.positions(d);
        let id = CMat::identity(4, 4);
        let mut h = kron(&self.q1.hamiltonian_at(x1, 0.0), &id) + kron(&id, &self.q2.hamiltonian_at(x2, 0.0));
        let j = self.exchange.j(d).unwrap_or(0.0);
        // (J/4)(σ₁·σ₂ − 1) = (J/2)(SWAP_spin − 1)
        for s1 in 0..2 {
            for v1 in 0..2 {
                for s2 in 0..2 {
                    for v2 in 0..2 {
                        let from = 4 * (2 * s1 + v1) + 2 * s2 + v2;
                        let to = 4 * (2 * s2 + v1) + 2 * s1 + v2;
                        h[(to, from)] += Complex64::new(0.5 * j, 0.0);
                        h[(from, from)] -= Complex64::new(0.5 * j, 0.0);
                    }
                }
            }
        }
        h
    }

    /// Product of the single-qubit computational bases at distance `d`,
    /// ordered |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩.
    pub fn computational_subspace(&self, d: f64) -> Result<Subspace> {
        let (x1, x2) = self.positions(d);
        let b1 = SingleQubitModel { x0: x1, ..self.q1.clone() }.computational_subspace()?.0;
        let b2 = SingleQubitModel { x0: x2, ..self.q2.clone() }.computational_subspace()?.0;
        Subspace::from_basis(kron(&b1.basis, &b2.basis))
    }

    /// Zeeman difference E_Z(x₁) − E_Z(x₂) at distance `d` (μeV).
    pub fn zeeman_difference(&self, d: f64) -> f64 {
        let (x1, x2) = self.positions(d);
        let b = |q: &SingleQubitModel, x: f64| q.field.at(x).map_or(0.0, |v| v.0);
        b(&self.q1, x1) - b(&self.q2, x2)
    }

    fn check_range(&self, p: &DistancePulse) -> Result<()> {
        let lo = p.d_far.min(p.d_hold) - 5.0 * self.sigma_d;
        let hi = p.d_far.max(p.d_hold) + 5.0 * self.sigma_d;
        if self.exchange.j(lo).is_none() || self.exchange.j(hi).is_none() {
            return Err(Error::OutOfDomain(format!("exchange law does not cover d ∈ [{lo:.2}, {hi:.2}] nm")));
        }
        for d in [lo, hi] {
            let (x1, x2) = self.positions(d);
            SingleQubitModel { x0: x1, ..self.q1.clone() }.check_domain(x1, x1)?;
            SingleQubitModel { x0: x2, ..self.q2.clone() }.check_domain(x2, x2)?;
        }
        Ok(())
    }
}

impl HamiltonianModel for TwoQubitModel {
    fn dim(&self) -> usize {
        16
    }
    fn noise_parameters(&self) -> usize {
        1
    }
    /// controls: [d]; noise: [δd].
    fn hamiltonian(&self, _t: f64, controls: &[f64], noise: &[f64]) -> CMat {
        self.hamiltonian_at(controls[0] + noise[0])
    }
}

/// CZ up to local z rotations: diag(e^{i(α+β)}, e^{i(α−β)}, e^{i(β−α)}, −e^{−i(α+β)}).
pub fn cz_class_target(alpha: f64, beta: f64) -> CMat {
    let e = |p: f64| Complex64::from_polar(1.0, p);
    let mut v = CMat::zeros(4, 4);
    v[(0, 0)] = e(alpha + beta);
    v[(1, 1)] = e(alpha - beta);
    v[(2, 2)] = e(beta - alpha);
    v[(3, 3)] = -e(-alpha - beta);
    v
}

/// Local z phases maximizing the fidelity of the 4×4 block `m` to the CZ
/// class: grid search then Nelder-Mead.
pub fn best_cz_phases(m: &CMat) -> Result<((f64, f64), f64)> {
    let id = Subspace::from_indices(4, &[0, 1, 2, 3])?;
    let score = |p: &[f64]| {
        process_fidelity_with_leakage(m, &cz_class_target(p[0], p[1]), &id).map_or(f64::INFINITY, |(f, _)| 1.0 - f)
    };
    let pi = std::f64::consts::PI;
    let mut start = [0.0, 0.0];
    let mut best = f64::INFINITY;
    for i in 0..16 {
        for k in 0..16 {
            let p = [-pi + pi * i as f64 / 8.0, -pi + pi * k as f64 / 8.0];
            let v = score(&p);
            if v < best {
                best = v;
                start = p;
            }
        }
    }
    let opts = OptimizeOptions { budget: 300, initial_step: Some(vec![0.1, 0.1]), f_tol: 1e-15, x_tol: 1e-10 };
    let r = optimize_pulse(score, &start, &[(-2.0 * pi, 2.0 * pi), (-2.0 * pi, 2.0 * pi)], &opts)?;
    Ok(((r.params[0], r.params[1]), 1.0 - r.value))
}

/// Makhlin local invariants (G1, G2) of a two-qubit gate. Non-unitary blocks
/// are replaced by their closest unitary (polar factor) first.
pub fn local_invariants(u: &CMat) -> Result<(Complex64, f64)> {
    if u.nrows() != 4 || u.ncols() != 4 {
        return Err(Error::Dimension("local invariants need a 4×4 matrix".into()));
    }
    let svd = u.clone().svd(true, true);
    let smin = svd.singular_values.min();
    let smax = svd.singular_values.max();
    if smin < 0.5 || smax > 1.0 + 1e-6 {
        return Err(Error::NotUnitary(1.0 - smin));
    }
    let w = svd.u.as_ref().expect("u requested") * svd.v_t.as_ref().expect("v_t requested");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (o, z, i) = (Complex64::new(s, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, s));
    let q = CMat::from_row_slice(4, 4, &[o, z, z, i, z, i, o, z, z, i, -o, z, o, z, z, -i]);
    let ub = q.adjoint() * w * &q;
    let m = ub.transpose() * &ub;
    let det = ub.determinant();
    let tr = m.trace();
    let tr2 = (&m * &m).trace();
    let g1 = tr * tr / (det * 16.0);
    let g2 = (tr * tr - tr2) / (det * 4.0);
    Ok((g1, g2.re))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzReport {
    pub report: FidelityReport,
    /// Noiseless fidelity after local phase optimization.
    pub noiseless_fidelity: f64,
    pub g1: [f64; 2],
    pub g2: f64,
    pub phases: [f64; 2],
    pub hold: f64,
}

fn cz_opts() -> PropagateOptions {
    PropagateOptions { allow_coarse_steps: true, ..Default::default() }
}

/// Noiseless computational block of the CZ pulse.
pub fn cz_block(model: &TwoQubitModel, pulse: &DistancePulse) -> Result<(CMat, Subspace)> {
    model.check_range(pulse)?;
    let sub = model.computational_subspace(pulse.d_far)?;
    let u = propagate(model, &pulse.pulse()?, &NoiseDraw::None, &cz_opts())?;
    Ok((sub.basis.adjoint() * u * &sub.basis, sub))
}

/// Propagate the approach pulse with quasistatic distance noise and score
/// against the CZ class. Local phases are fixed from the noiseless run.
///
/// The distance is piecewise constant and the hold is a single repeated
/// exponential, so the valley scale does not constrain `pulse.dt`.
pub fn simulate_cz(model: &TwoQubitModel, pulse: &DistancePulse, shots: usize, seed: SeedSpec) -> Result<CzReport> {
    let (block, sub) = cz_block(model, pulse)?;
    let ((a, b), f0) = best_cz_phases(&block)?;
    let (g1, g2) = local_invariants(&block)?;
    let target = cz_class_target(a, b);
    let channels = [NoiseChannel::quasistatic(0, model.sigma_d)];
    let values = monte_carlo_map(model, &pulse.pulse()?, &channels, shots, seed, &cz_opts(), |u| {
        process_fidelity_with_leakage(u, &target, &sub)
    })?;
    Ok(CzReport {
        report: FidelityReport::from_shots(&values, seed, false),
        noiseless_fidelity: f0,
        g1: [g1.re, g1.im],
        g2,
        phases: [a, b],
        hold: pulse.hold,
    })
}

/// Computational blocks of `shots` noisy realizations of the CZ pulse.
pub fn cz_blocks(model: &TwoQubitModel, pulse: &DistancePulse, shots: usize, seed: SeedSpec) -> Result<Vec<CMat>> {
    model.check_range(pulse)?;
    let sub = model.computational_subspace(pulse.d_far)?;
    let channels = [NoiseChannel::quasistatic(0, model.sigma_d)];
    monte_carlo_map(model, &pulse.pulse()?, &channels, shots, seed, &cz_opts(), |u| {
        Ok(sub.basis.adjoint() * u * &sub.basis)
    })
}

/// Hold time maximizing the noiseless CZ-class fidelity, searched within
/// ±`span` (fraction) of `pulse.hold`.
pub fn optimize_hold(model: &TwoQubitModel, pulse: &DistancePulse, span: f64) -> Result<(DistancePulse, f64)> {
    let lo = pulse.hold * (1.0 - span);
    let hi = pulse.hold * (1.0 + span);
    let with = |h: f64| DistancePulse { hold: h.max(0.0), ..*pulse };
    let objective = |p: &[f64]| {
        cz_block(model, &with(p[0])).and_then(|(m, _)| best_cz_phases(&m)).map_or(f64::INFINITY, |(_, f)| 1.0 - f)
    };
    // coarse scan first; the conditional phase is monotone in the hold time
    let n = 20;
    let mut start = pulse.hold;
    let mut best = f64::INFINITY;
    for k in 0..=n {
        let h = lo + (hi - lo) * k as f64 / n as f64;
        let v = objective(&[h]);
        if v < best {
            best = v;
            start = h;
        }
    }
    let opts = OptimizeOptions {
        budget: 60,
        initial_step: Some(vec![(hi - lo) / (2.0 * n as f64)]),
        f_tol: 1e-13,
        x_tol: 1e-6,
    };
    let r = optimize_pulse(objective, &[start], &[(lo, hi)], &opts)?;
    Ok((with(r.params[0]), 1.0 - r.value))
}

/// Hold time giving a conditional phase of π at constant exchange `j`.
pub fn pi_hold_time(j: f64) -> f64 {
    std::f64::consts::PI * HBAR_UEV_NS / j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gatesim::edsr::SpinField;
    use crate::physcore::UnitSystem;
    use crate::qdyn::pauli;
    use rand::Rng;

    fn model(d_par_mt: f64, law: ExchangeLaw) -> TwoQubitModel {
        let field = SpinField::linear_mt(&UnitSystem::default(), 20.0, d_par_mt, 0.0, 0.0);
        let q = SingleQubitModel::uniform(field, Complex64::new(20.0, 0.0), 0.0);
        TwoQubitModel { q1: q.clone(), q2: q, exchange: law, center: 0.0, sigma_d: 0.01 }
    }

    fn constant(j: f64) -> ExchangeLaw {
        ExchangeLaw::Exponential { j_ref: j, d_ref: 0.0, decay: f64::INFINITY }
    }

    fn random_su2<R: Rng>(rng: &mut R) -> CMat {
        let (a, b, c): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
        let n = [a - 0.5, b - 0.5, c - 0.5];
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        let th = 6.0 * rng.gen::<f64>();
        let gen = (pauli(1) * Complex64::new(n[0] / norm, 0.0)
            + pauli(2) * Complex64::new(n[1] / norm, 0.0)
            + pauli(3) * Complex64::new(n[2] / norm, 0.0))
            * Complex64::new(0.0, -th / 2.0);
        gen.exp()
    }

    #[test]
    fn exchange_term_is_heisenberg_on_spins() {
        let mut m = model(0.0, constant(0.3));
        m.q1.field = SpinField::Linear { b_par: 0.0, d_par: 0.0, b_perp: 0.0, d_perp: 0.0 };
        m.q2 = m.q1.clone();
        m.q1.kappa = [0.0; 2];
        m.q2.kappa = [0.0; 2];
        let h = m.hamiltonian_at(50.0);
        let valley = CMat::identity(4, 4).kronecker(&m.q1.hamiltonian_at(0.0, 0.0)) * Complex64::new(0.0, 0.0);
        let _ = valley;
        let id2 = pauli(0);
        let sv = |s: &CMat| s.kronecker(&id2);
        let mut ex = CMat::zeros(16, 16);
        for a in 1..=3 {
            ex += sv(&pauli(a)).kronecker(&sv(&pauli(a)));
        }
        ex -= CMat::identity(16, 16);
        let ex = ex * Complex64::new(0.3 / 4.0, 0.0);
        let local = m.q1.hamiltonian_at(0.0, 0.0).kronecker(&CMat::identity(4, 4))
            + CMat::identity(4, 4).kronecker(&m.q2.hamiltonian_at(0.0, 0.0));
        assert!((h - local - ex).norm() < 1e-13);
    }

    #[test]
    fn invariants_of_standard_gates() {
        let (g1, g2) = local_invariants(&CMat::identity(4, 4)).unwrap();
        assert!((g1 - Complex64::new(1.0, 0.0)).norm() < 1e-12 && (g2 - 3.0).abs() < 1e-12);
        for gate in [cz_class_target(0.0, 0.0), crate::gatesim::cnot_matrix()] {
            let (g1, g2) = local_invariants(&gate).unwrap();
            assert!(g1.norm() < 1e-12 && (g2 - 1.0).abs() < 1e-12, "{g1} {g2}");
        }
    }

    #[test]
    fn invariants_ignore_local_unitaries() {
        let mut rng = SeedSpec::new(8).rng();
        let u = cz_class_target(0.3, -1.1) * crate::gatesim::cnot_matrix();
        let (g1, g2) = local_invariants(&u).unwrap();
        for _ in 0..20 {
            let a = random_su2(&mut rng).kronecker(&random_su2(&mut rng));
            let b = random_su2(&mut rng).kronecker(&random_su2(&mut rng));
            let (h1, h2) = local_invariants(&(a * &u * b)).unwrap();
            assert!((h1 - g1).norm() < 1e-10 && (h2 - g2).abs() < 1e-10);
        }
        assert!(local_invariants(&(CMat::identity(4, 4) * Complex64::new(0.2, 0.0))).is_err());
    }

    #[test]
    fn no_exchange_means_no_entanglement() {
        let m = model(0.1, constant(0.0));
        let p = DistancePulse { d_far: 120.0, d_hold: 80.0, ramp: 5.0, hold: 50.0, dt: 0.05 };
        let (block, _) = cz_block(&m, &p).unwrap();
        let (g1, g2) = local_invariants(&block).unwrap();
        assert!((g1.re - 1.0).abs() < 1e-9 && g1.im.abs() < 1e-9 && (g2 - 3.0).abs() < 1e-9);
    }

    #[test]
    fn pi_hold_at_constant_exchange_gives_cz_class() {
        let j = 0.041;
        let m = model(0.3, constant(j));
        let p = DistancePulse { d_far: 80.0, d_hold: 80.0, ramp: 0.0, hold: pi_hold_time(j), dt: 0.05 };
        assert!(m.zeeman_difference(80.0).abs() > 50.0 * j);
        let (block, _) = cz_block(&m, &p).unwrap();
        let (g1, g2) = local_invariants(&block).unwrap();
        assert!(g1.norm() < 1e-3 && (g2 - 1.0).abs() < 1e-3, "{g1} {g2}");
    }

    #[test]
    fn entangling_power_grows_up_to_pi_hold() {
        let j = 0.041;
        let m = model(0.3, constant(j));
        let tau = pi_hold_time(j);
        let mut prev = f64::INFINITY;
        for k in 1..=10 {
            let p = DistancePulse { d_far: 80.0, d_hold: 80.0, ramp: 0.0, hold: tau * k as f64 / 10.0, dt: 0.05 };
            let (block, _) = cz_block(&m, &p).unwrap();
            let g1 = local_invariants(&block).unwrap().0.norm();
            assert!(g1 < prev + 1e-9, "{k}: {g1}");
            prev = g1;
        }
    }

    #[test]
    fn table_law_must_cover_the_pulse() {
        let law = ExchangeLaw::Table { d: vec![60.0, 80.0, 100.0], j: vec![1.0, 0.04, 0.002] };
        assert!((law.j(80.0).unwrap() - 0.04).abs() < 1e-12);
        assert!((law.distance_for(0.04).unwrap() - 80.0).abs() < 1e-9);
        let m = model(0.1, law);
        let p = DistancePulse { d_far: 120.0, d_hold: 80.0, ramp: 5.0, hold: 50.0, dt: 0.05 };
        assert!(matches!(simulate_cz(&m, &p, 1, SeedSpec::new(0)), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn monte_carlo_reproducible() {
        let m = model(0.1, ExchangeLaw::Exponential { j_ref: 0.041, d_ref: 80.0, decay: 5.0 });
        let p = DistancePulse { d_far: 110.0, d_hold: 80.0, ramp: 2.0, hold: 48.0, dt: 0.1 };
        let a = simulate_cz(&m, &p, 20, SeedSpec::new(4)).unwrap();
        let b = simulate_cz(&m, &p, 20, SeedSpec::new(4)).unwrap();
        assert_eq!(a, b);
    }
}
