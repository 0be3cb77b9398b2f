use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::gates::Binding;
use super::layout::{DeviceLayout, LayoutKind};
use crate::{Error, Result};

/// Δφ_i = π/2·(i−1) for clavier set i.
pub fn phase_offset(set: u8) -> f64 {
    FRAC_PI_2 * (set as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    Linear,
    /// φ_a + (φ_b − φ_a)(1 − cos πs)/2; zero slope at both ends.
    RaisedCosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSegment {
    pub t_ns: f64,
    pub phase_rad: f64,
    pub shape: RampShape,
}

/// Continuous piecewise phase φ(t) starting at `start_phase` at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTrajectory {
    pub start_phase: f64,
    pub phase_breakpoints: Vec<PhaseSegment>,
}

impl PhaseTrajectory {
    pub fn constant(phase: f64) -> Self {
        Self { start_phase: phase, phase_breakpoints: Vec::new() }
    }

    pub fn end_time(&self) -> f64 {
        self.phase_breakpoints.last().map_or(0.0, |s| s.t_ns)
    }

    pub fn end_phase(&self) -> f64 {
        self.phase_breakpoints.last().map_or(self.start_phase, |s| s.phase_rad)
    }

    pub fn push(&mut self, t_ns: f64, phase_rad: f64, shape: RampShape) {
        self.phase_breakpoints.push(PhaseSegment { t_ns, phase_rad, shape });
    }

    pub fn phase(&self, t: f64) -> f64 {
        let mut t_a = 0.0;
        let mut p_a = self.start_phase;
        for seg in &self.phase_breakpoints {
            if t <= seg.t_ns {
                let span = seg.t_ns - t_a;
                if span <= 0.0 {
                    return seg.phase_rad;
                }
                let s = ((t - t_a) / span).clamp(0.0, 1.0);
                let w = match seg.shape {
                    RampShape::Linear => s,
                    RampShape::RaisedCosine => 0.5 * (1.0 - (PI * s).cos()),
                };
                return p_a + (seg.phase_rad - p_a) * w;
            }
            t_a = seg.t_ns;
            p_a = seg.phase_rad;
        }
        p_a
    }

    /// Largest |d²φ/dt²| over the trajectory (rad/ns²). Linear segments
    /// contribute nothing away from their joints.
    pub fn max_phase_acceleration(&self) -> f64 {
        let mut t_a = 0.0;
        let mut p_a = self.start_phase;
        let mut worst = 0.0_f64;
        for seg in &self.phase_breakpoints {
            let span = seg.t_ns - t_a;
            if seg.shape == RampShape::RaisedCosine && span > 0.0 {
                worst = worst.max((seg.phase_rad - p_a).abs() * PI * PI / (2.0 * span * span));
            }
            t_a = seg.t_ns;
            p_a = seg.phase_rad;
        }
        worst
    }

    /// φ'(t) = φ(T − t).
    pub fn reversed(&self, duration: f64) -> Self {
        let mut points: Vec<(f64, f64, RampShape)> = vec![(0.0, self.start_phase, RampShape::Linear)];
        points.extend(self.phase_breakpoints.iter().map(|s| (s.t_ns, s.phase_rad, s.shape)));
        if self.end_time() < duration {
            points.push((duration, self.end_phase(), RampShape::Linear));
        }
        let mut out = PhaseTrajectory::constant(points.last().unwrap().1);
        for w in points.windows(2).rev() {
            let (t_a, p_a, _) = w[0];
            let (_, _, shape) = w[1];
            out.push(duration - t_a, p_a, shape);
        }
        out
    }
}

/// Voltage program for all lanes of a device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformProgram {
    #[serde(rename = "amplitude_mV")]
    pub amplitude_mv: f64,
    pub lanes: Vec<PhaseTrajectory>,
    pub static_voltages: BTreeMap<Binding, f64>,
    pub duration: f64,
}

impl WaveformProgram {
    pub fn reversed(&self) -> Self {
        Self { lanes: self.lanes.iter().map(|l| l.reversed(self.duration)).collect(), ..self.clone() }
    }

    pub fn max_phase_acceleration(&self) -> f64 {
        self.lanes.iter().map(PhaseTrajectory::max_phase_acceleration).fold(0.0, f64::max)
    }

    /// `n` equally spaced frame times covering [0, duration].
    pub fn frame_times(&self, n: usize) -> Vec<f64> {
        assert!(n >= 2);
        (0..n).map(|k| self.duration * k as f64 / (n - 1) as f64).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("program serializes")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

/// V_i = A_S·cos(φ(t) − Δφ_i) for every clavier set of every lane, plus the
/// static bindings unchanged.
pub fn shuttle_voltages(program: &WaveformProgram, t: f64) -> Result<BTreeMap<Binding, f64>> {
    let tol = 1e-9 * program.duration.max(1.0);
    if !(t >= -tol && t <= program.duration + tol) {
        return Err(Error::TimeOutOfRange { t, duration: program.duration });
    }
    let mut v = program.static_voltages.clone();
    for (lane, traj) in program.lanes.iter().enumerate() {
        let phi = traj.phase(t);
        for set in 1..=4u8 {
            v.insert(
                Binding::Clavier { lane: lane as u8, set },
                program.amplitude_mv * (phi - phase_offset(set)).cos(),
            );
        }
    }
    Ok(v)
}

/// Constant-velocity conveyor on lane 0: φ(t) = φ₀ + 2π·v·t/λ with λ = 4·pitch.
/// Any further lanes are held at `idle_phase`.
pub fn straight_program(
    amplitude_mv: f64,
    velocity_nm_per_ns: f64,
    pitch: f64,
    duration: f64,
    start_phase: f64,
    extra_lanes: usize,
    idle_phase: f64,
    static_voltages: BTreeMap<Binding, f64>,
) -> WaveformProgram {
    let wavelength = 4.0 * pitch;
    let mut lane0 = PhaseTrajectory::constant(start_phase);
    lane0.push(duration, start_phase + 2.0 * PI * velocity_nm_per_ns * duration / wavelength, RampShape::Linear);
    let mut lanes = vec![lane0];
    lanes.extend((0..extra_lanes).map(|_| PhaseTrajectory::constant(idle_phase)));
    WaveformProgram { amplitude_mv, lanes, static_voltages, duration }
}

/// Parameters of the T-junction program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerProgramSpec {
    #[serde(rename = "amplitude_mV")]
    pub amplitude_mv: f64,
    pub duration: f64,
    /// `false` gives the straight-through degenerate case.
    pub turn: bool,
    /// Upper bound on |d²φ/dt²| in rad/ns².
    pub max_phase_acceleration: f64,
    pub static_voltages: BTreeMap<Binding, f64>,
}

impl Default for CornerProgramSpec {
    fn default() -> Self {
        Self {
            amplitude_mv: 100.0,
            duration: 400.0,
            turn: true,
            max_phase_acceleration: 0.05,
            static_voltages: [(Binding::Screening, -50.0)].into_iter().collect(),
        }
    }
}

/// Program moving a dot from x = −2·pitch on lane 0 into lane 1 (or straight
/// through the junction when `turn` is false).
///
/// Stages, each a raised-cosine ramp with duration proportional to its largest
/// phase step:
/// 1. lane 0 brings the dot to rest under the junction finger (φ₀: −π → 0)
///    while lane 1 holds its first finger at −A_S;
/// 2. lane 1 advances by π, raising its first finger to +A_S next to the dot;
/// 3. lane 0 advances by π, turning the junction finger repulsive behind the
///    dot while lane 1 keeps pulling (+π/2);
/// 4. lane 1 carries the dot up the branch (+3π/2).
pub fn corner_shuttle_program(layout: &DeviceLayout, spec: &CornerProgramSpec) -> Result<WaveformProgram> {
    if layout.kind != LayoutKind::TJunction {
        return Err(Error::InvalidGeometry("corner shuttling needs a T-junction layout".into()));
    }
    let stages: Vec<(f64, f64)> =
        if spec.turn { vec![(PI, 0.0), (0.0, PI), (PI, FRAC_PI_2), (0.0, 1.5 * PI)] } else { vec![(2.0 * PI, 0.0)] };
    let weight: f64 = stages.iter().map(|(a, b)| a.abs().max(b.abs())).sum();
    let mut lane0 = PhaseTrajectory::constant(-PI);
    let mut lane1 = PhaseTrajectory::constant(PI);
    let mut t = 0.0;
    for (d0, d1) in &stages {
        let span = spec.duration * d0.abs().max(d1.abs()) / weight;
        t += span;
        let p0 = lane0.end_phase() + d0;
        let p1 = lane1.end_phase() + d1;
        lane0.push(t, p0, if *d0 != 0.0 { RampShape::RaisedCosine } else { RampShape::Linear });
        lane1.push(t, p1, if *d1 != 0.0 { RampShape::RaisedCosine } else { RampShape::Linear });
    }
    let program = WaveformProgram {
        amplitude_mv: spec.amplitude_mv,
        lanes: vec![lane0, lane1],
        static_voltages: spec.static_voltages.clone(),
        duration: spec.duration,
    };
    let accel = program.max_phase_acceleration();
    if accel > spec.max_phase_acceleration {
        return Err(Error::DurationTooShort {
            duration: spec.duration,
            reason: format!("phase acceleration {accel:.4} rad/ns² exceeds bound {}", spec.max_phase_acceleration),
        });
    }
    Ok(program)
}

/// Approach-hold-retreat program for the manipulation zone: both lanes move
/// their dots towards the central barrier from phase `far_phase` to
/// `near_phase`, hold, and return. Mirror-symmetric, so detuning stays zero.
pub fn approach_program(
    amplitude_mv: f64,
    barrier_mv: f64,
    screening_mv: f64,
    far_phase: f64,
    near_phase: f64,
    ramp_ns: f64,
    hold_ns: f64,
) -> WaveformProgram {
    let mut lane = PhaseTrajectory::constant(far_phase);
    lane.push(ramp_ns, near_phase, RampShape::RaisedCosine);
    lane.push(ramp_ns + hold_ns, near_phase, RampShape::Linear);
    lane.push(2.0 * ramp_ns + hold_ns, far_phase, RampShape::RaisedCosine);
    WaveformProgram {
        amplitude_mv,
        lanes: vec![lane.clone(), lane],
        static_voltages: [(Binding::Individual(0), barrier_mv), (Binding::Screening, screening_mv)]
            .into_iter()
            .collect(),
        duration: 2.0 * ramp_ns + hold_ns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::layout::DeviceDefaults;

    fn program(phi: f64) -> WaveformProgram {
        WaveformProgram {
            amplitude_mv: 100.0,
            lanes: vec![PhaseTrajectory::constant(phi)],
            static_voltages: [(Binding::TopGate, 100.0)].into_iter().collect(),
            duration: 10.0,
        }
    }

    #[test]
    fn offsets() {
        let got: Vec<f64> = (1..=4).map(phase_offset).collect();
        assert_eq!(got, vec![0.0, FRAC_PI_2, PI, 1.5 * PI]);
    }

    #[test]
    fn voltages_at_phase_zero_and_quarter() {
        let v = shuttle_voltages(&program(0.0), 0.0).unwrap();
        assert!((v[&Binding::Clavier { lane: 0, set: 1 }] - 100.0).abs() < 1e-12);
        assert!((v[&Binding::Clavier { lane: 0, set: 3 }] + 100.0).abs() < 1e-12);
        assert_eq!(v[&Binding::TopGate], 100.0);
        let v = shuttle_voltages(&program(FRAC_PI_2), 5.0).unwrap();
        assert!((v[&Binding::Clavier { lane: 0, set: 2 }] - 100.0).abs() < 1e-12);
        assert!((v[&Binding::Clavier { lane: 0, set: 4 }] + 100.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_time() {
        assert!(matches!(shuttle_voltages(&program(0.0), 10.5), Err(Error::TimeOutOfRange { .. })));
        assert!(shuttle_voltages(&program(0.0), -1.0).is_err());
    }

    #[test]
    fn trajectory_is_continuous_and_reversible() {
        let mut tr = PhaseTrajectory::constant(0.3);
        tr.push(4.0, 1.0, RampShape::RaisedCosine);
        tr.push(9.0, 2.5, RampShape::Linear);
        let rev = tr.reversed(12.0);
        for k in 0..=120 {
            let t = k as f64 * 0.1;
            assert!((rev.phase(t) - tr.phase(12.0 - t)).abs() < 1e-12, "t = {t}");
            let eps = 1e-7;
            assert!((tr.phase(t + eps) - tr.phase(t)).abs() < 1e-5);
        }
    }

    #[test]
    fn corner_program_checks() {
        let layout = DeviceLayout::t_junction(DeviceDefaults::default(), 4, 6);
        let spec = CornerProgramSpec::default();
        let p = corner_shuttle_program(&layout, &spec).unwrap();
        assert_eq!(p.lanes.len(), 2);
        assert!((p.lanes[0].phase(0.0) + PI).abs() < 1e-12);

        let straight = corner_shuttle_program(&layout, &CornerProgramSpec { turn: false, ..spec.clone() }).unwrap();
        for t in straight.frame_times(30) {
            assert_eq!(straight.lanes[1].phase(t), PI);
        }

        let short = CornerProgramSpec { duration: 10.0, ..spec.clone() };
        assert!(matches!(corner_shuttle_program(&layout, &short), Err(Error::DurationTooShort { .. })));
        let lane = DeviceLayout::straight_lane(DeviceDefaults::default(), -3, 3);
        assert!(corner_shuttle_program(&lane, &spec).is_err());
    }

    #[test]
    fn program_toml_round_trip() {
        let layout = DeviceLayout::t_junction(DeviceDefaults::default(), 4, 6);
        let p = corner_shuttle_program(&layout, &CornerProgramSpec::default()).unwrap();
        let text = p.to_toml();
        assert!(text.contains("amplitude_mV"));
        assert!(text.contains("phase_breakpoints"));
        assert_eq!(WaveformProgram::from_toml(&text).unwrap(), p);
    }
}
