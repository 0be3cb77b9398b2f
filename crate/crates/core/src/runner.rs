//! Config-driven experiment runner.
//!
//! A config is TOML with top-level `kind`, optional `seed`, `shots`, `out` and
//! `include`, plus a `[params]` table specific to the kind. Included files are
//! merged first, relative to the including file, and the including file wins.
//! Unknown keys are rejected at every level.
//!
//! A run writes `<kind>-<hash>.toml` (resolved config and results) and
//! `<kind>-<hash>.csv` into the output directory, where `<hash>` is taken over
//! the resolved config. Nothing is written when the run fails.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::archsched::{
    cycle_time, max_unit_cells, plan_cycle_staggered, signal_count, CellId, Timing, UnitCellGrid, VisitOrder,
};
use crate::exchange::{ApproachSpec, TwoElectronParams};
use crate::gatesim::{
    calibrate_edsr, measure_rabi_frequency, optimize_hold, optimize_jump, pi_hold_time, simulate_cnot_sequence,
    simulate_cz, simulate_edsr, simulate_init, simulate_readout, valley_yield, DistancePulse, EdsrDrive, EdsrNoise,
    Envelope, InitRamp, InitReadoutModel, SingleQubitModel, SpinField, TwoQubitModel, YieldOptions,
};
use crate::physcore::{psd_from_asd_per_sqrt_hz, SeedSpec, UnitSystem, PLANCK_UEV_NS};
use crate::potentials::{
    corner_shuttle_program, orbital_splitting, track_dot_minimum, CornerProgramSpec, DeviceDefaults, DeviceLayout,
    DeviceModel, Grid2, OrbitalOptions, TrackOptions,
};
use crate::Error;

/// One entry of the experiment catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub kind: &'static str,
    pub reproduces: &'static str,
    pub criterion: u8,
    pub csv_columns: &'static str,
}

pub const CATALOG: [CatalogEntry; 10] = [
    CatalogEntry {
        kind: "shuttle-straight",
        reproduces: "orbital splitting of a dot shuttled straight through a T-junction",
        criterion: 7,
        csv_columns: "t_ns,x_nm,y_nm,v_min_ueV,splitting_ueV",
    },
    CatalogEntry {
        kind: "shuttle-corner",
        reproduces: "orbital splitting dip while turning a corner at a T-junction",
        criterion: 7,
        csv_columns: "t_ns,x_nm,y_nm,v_min_ueV,splitting_ueV",
    },
    CatalogEntry {
        kind: "init-readout",
        reproduces: "singlet-T0 initialization and readout fidelity above 99.9%",
        criterion: 1,
        csv_columns: "stage,fidelity,stderr,leakage,shots",
    },
    CatalogEntry {
        kind: "edsr",
        reproduces: "shuttling-mode EDSR Rabi frequency near 10 MHz and single-qubit gate fidelity",
        criterion: 2,
        csv_columns: "metric,value",
    },
    CatalogEntry {
        kind: "cz",
        reproduces: "exchange CZ gate at a 50 ns hold with positional noise",
        criterion: 5,
        csv_columns: "metric,value",
    },
    CatalogEntry {
        kind: "cnot",
        reproduces: "CNOT from a CZ and two target rotations",
        criterion: 5,
        csv_columns: "stage,fidelity,stderr,leakage,shots",
    },
    CatalogEntry {
        kind: "valley-yield",
        reproduces: "fraction of valley-splitting draws giving a 99.9% single-qubit gate",
        criterion: 4,
        csv_columns: "draw,fidelity,position_nm",
    },
    CatalogEntry {
        kind: "j-of-d",
        reproduces: "exchange coupling versus dot distance in the manipulation zone",
        criterion: 8,
        csv_columns: "d_nm,J_ueV",
    },
    CatalogEntry {
        kind: "surface-cycle",
        reproduces: "conflict-free stabilizer cycle with ancilla shuttling",
        criterion: 10,
        csv_columns: "event,qubit,segment,t0_ns,t1_ns",
    },
    CatalogEntry {
        kind: "wiring",
        reproduces: "14N+4 AC and 3N+4 DC signal count",
        criterion: 9,
        csv_columns: "cells,ac,dc,fits",
    },
];

/// Catalog as TOML, one `[[experiment]]` table per kind.
pub fn list_experiments() -> String {
    #[derive(Serialize)]
    struct Catalog {
        experiment: Vec<CatalogEntry>,
    }
    toml::to_string(&Catalog { experiment: CATALOG.to_vec() }).expect("catalog serializes")
}

#[derive(Debug)]
pub enum RunError {
    /// Unreadable, malformed or unknown configuration.
    Config(String),
    /// Error raised by a simulation module.
    Domain(Error),
    /// The planned schedule has conflicts.
    Conflict(String),
    /// Writing outputs failed.
    Output(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Domain(_) | RunError::Output(_) => 3,
            RunError::Conflict(_) => 4,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Domain(e) => write!(f, "{e}"),
            RunError::Conflict(m) => write!(f, "schedule conflicts: {m}"),
            RunError::Output(e) => write!(f, "writing outputs: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::ScheduleConflict(m) => RunError::Conflict(m),
            Error::Config(m) => RunError::Config(m),
            e => RunError::Domain(e),
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub params: Table,
}

/// Command-line overrides applied after loading.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub shots: Option<usize>,
    pub out: Option<PathBuf>,
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn load_table(path: &Path, depth: usize) -> Result<Table, RunError> {
    if depth > 8 {
        return Err(RunError::Config(format!("include depth exceeded at {}", path.display())));
    }
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let mut table: Table = text.parse().map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let Some(inc) = table.remove("include") else { return Ok(table) };
    let list = match inc {
        Value::String(s) => vec![s],
        Value::Array(a) => a
            .into_iter()
            .map(|v| v.as_str().map(str::to_owned))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| RunError::Config("include must list file paths".into()))?,
        _ => return Err(RunError::Config("include must be a path or a list of paths".into())),
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut merged = Table::new();
    for p in list {
        merge(&mut merged, load_table(&dir.join(p), depth + 1)?);
    }
    merge(&mut merged, table);
    Ok(merged)
}

/// Parses a config file with its includes.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let table = load_table(path, 0)?;
    parse_config(table)
}

pub fn parse_config(table: Table) -> Result<ExperimentConfig, RunError> {
    let cfg: ExperimentConfig =
        Value::Table(table).try_into().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
    if !CATALOG.iter().any(|c| c.kind == cfg.kind) {
        return Err(RunError::Config(format!("unknown experiment kind `{}`", cfg.kind)));
    }
    check_params(&cfg)?;
    Ok(cfg)
}

fn check_params(cfg: &ExperimentConfig) -> Result<(), RunError> {
    let t = &cfg.params;
    match cfg.kind.as_str() {
        "shuttle-straight" | "shuttle-corner" => params::<ShuttleParams>(t).map(drop),
        "init-readout" => params::<InitParams>(t).map(drop),
        "edsr" => params::<QubitParams>(t).map(drop),
        "cz" | "cnot" => params::<CzParams>(t).map(drop),
        "valley-yield" => params::<YieldParams>(t).map(drop),
        "j-of-d" => params::<JdParams>(t).map(drop),
        "surface-cycle" => params::<CycleParams>(t).map(drop),
        _ => params::<WiringParams>(t).map(drop),
    }
}

fn params<T: DeserializeOwned>(t: &Table) -> Result<T, RunError> {
    Value::Table(t.clone()).try_into().map_err(|e: toml::de::Error| RunError::Config(format!("params: {e}")))
}

fn to_table<T: Serialize>(v: &T) -> Table {
    match Value::try_from(v) {
        Ok(Value::Table(t)) => t,
        _ => Table::new(),
    }
}

/// Results of one experiment before anything is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Parameters with defaults filled in.
    pub params: Table,
    pub shots: Option<usize>,
    pub results: Table,
    pub csv: String,
    /// Extra text outputs as `(suffix, content)`.
    pub extra: Vec<(String, String)>,
}

macro_rules! table {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut t = Table::new();
        $(t.insert($k.to_string(), Value::from($v));)*
        t
    }};
}

fn report_row(stage: &str, r: &crate::qdyn::FidelityReport) -> String {
    format!("{stage},{},{},{},{}\n", r.fidelity, r.stderr, r.leakage, r.shots)
}

fn metric_csv(rows: &[(&str, f64)]) -> String {
    let mut s = String::from("metric,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShuttleParams {
    #[serde(rename = "amplitude_mV")]
    pub amplitude_mv: f64,
    pub duration_ns: f64,
    pub frames: usize,
    pub grid_spacing_nm: f64,
    pub solver_spacing_nm: f64,
    pub window_nm: f64,
    #[serde(rename = "floor_ueV")]
    pub floor_uev: f64,
}

impl Default for ShuttleParams {
    fn default() -> Self {
        Self {
            amplitude_mv: 100.0,
            duration_ns: 400.0,
            frames: 81,
            grid_spacing_nm: 2.0,
            solver_spacing_nm: 2.0,
            window_nm: 200.0,
            floor_uev: 300.0,
        }
    }
}

fn run_shuttle(cfg: &ExperimentConfig, turn: bool) -> Result<Outcome, RunError> {
    let p: ShuttleParams = params(&cfg.params)?;
    let layout = DeviceLayout::t_junction(DeviceDefaults::default(), 5, 6);
    let grid = Grid2::covering(-400.0, 400.0, -250.0, 600.0, p.grid_spacing_nm);
    let dev = DeviceModel::new(layout.clone(), &grid)?;
    let spec = CornerProgramSpec { amplitude_mv: p.amplitude_mv, duration: p.duration_ns, turn, ..Default::default() };
    let prog = corner_shuttle_program(&layout, &spec)?;
    let frames = dev.frames(&prog, p.frames)?;
    let track = track_dot_minimum(&frames, (-200.0, 0.0), &TrackOptions::default())?;
    let opts = OrbitalOptions { spacing: p.solver_spacing_nm, window: p.window_nm, ..Default::default() };
    let mut csv = String::from("t_ns,x_nm,y_nm,v_min_ueV,splitting_ueV\n");
    let mut min = f64::INFINITY;
    let mut unbound = 0usize;
    for (pt, f) in track.iter().zip(&frames) {
        let o = orbital_splitting(f, (pt.x, pt.y), &opts)?;
        min = min.min(o.splitting);
        unbound += o.unbound_warning as usize;
        csv.push_str(&format!("{},{},{},{},{}\n", pt.t, pt.x, pt.y, pt.v_min, o.splitting));
    }
    let last = track.last().map_or([0.0, 0.0], |t| [t.x, t.y]);
    let results = table! {
        "min_splitting_ueV" => min,
        "above_floor" => min > p.floor_uev,
        "final_x_nm" => last[0],
        "final_y_nm" => last[1],
        "unbound_frames" => unbound as i64,
    };
    Ok(Outcome { params: to_table(&p), shots: None, results, csv, extra: vec![] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitParams {
    #[serde(rename = "b_par_mT")]
    pub b_par_mt: f64,
    #[serde(rename = "delta_b_par_mT")]
    pub delta_b_par_mt: f64,
    #[serde(rename = "delta_b_perp_mT")]
    pub delta_b_perp_mt: f64,
    pub ramp_ns: f64,
    /// Detuning noise amplitude in neV/√Hz.
    pub detuning_asd: f64,
    pub jump_grid: usize,
    pub jump_budget: usize,
}

impl Default for InitParams {
    fn default() -> Self {
        Self {
            b_par_mt: 20.0,
            delta_b_par_mt: 1.0,
            delta_b_perp_mt: 0.3,
            ramp_ns: 200.0,
            detuning_asd: 0.02,
            jump_grid: 24,
            jump_budget: 80,
        }
    }
}

fn run_init(cfg: &ExperimentConfig, seed: SeedSpec) -> Result<Outcome, RunError> {
    let p: InitParams = params(&cfg.params)?;
    let shots = cfg.shots.unwrap_or(200);
    let u = UnitSystem::default();
    let mut m = InitReadoutModel::from_fields(&u, p.b_par_mt, p.delta_b_par_mt, p.delta_b_perp_mt);
    let (ramp, noiseless) = optimize_jump(&m, &InitRamp::for_model(&m, p.ramp_ns), p.jump_grid, p.jump_budget)?;
    m.noise.white_psd = psd_from_asd_per_sqrt_hz(p.detuning_asd * 1e-3);
    let init = simulate_init(&m, &ramp, shots, seed)?;
    let readout = simulate_readout(&m, &ramp, shots, seed)?;
    let csv = String::from("stage,fidelity,stderr,leakage,shots\n")
        + &report_row("init", &init)
        + &report_row("readout", &readout);
    let mut results = table! {
        "noiseless_init_fidelity" => noiseless,
        "init_fidelity" => init.fidelity,
        "init_stderr" => init.stderr,
        "readout_fidelity" => readout.fidelity,
        "readout_stderr" => readout.stderr,
    };
    if let Some(j) = ramp.jump {
        results.insert("jump_upper_ueV".into(), Value::from(j.upper));
        results.insert("jump_lower_ueV".into(), Value::from(j.lower));
    }
    Ok(Outcome { params: to_table(&p), shots: Some(shots), results, csv, extra: vec![] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QubitParams {
    #[serde(rename = "b_par_mT")]
    pub b_par_mt: f64,
    #[serde(rename = "gradient_mT_per_nm")]
    pub gradient: f64,
    #[serde(rename = "valley_splitting_ueV")]
    pub valley_splitting: f64,
    pub amplitude_nm: f64,
    /// White positional noise in nm/√Hz.
    pub position_asd: f64,
    pub calibration_budget: usize,
}

impl Default for QubitParams {
    fn default() -> Self {
        Self {
            b_par_mt: 20.0,
            gradient: 0.075,
            valley_splitting: 100.0,
            amplitude_nm: 10.0,
            position_asd: 1e-7,
            calibration_budget: 60,
        }
    }
}

impl QubitParams {
    fn model(&self, u: &UnitSystem) -> SingleQubitModel {
        let field = SpinField::linear_mt(u, self.b_par_mt, 0.0, 0.0, self.gradient);
        SingleQubitModel::uniform(field, Complex64::new(0.5 * self.valley_splitting, 0.0), 0.0)
    }

    fn noise(&self) -> EdsrNoise {
        EdsrNoise { position_psd: psd_from_asd_per_sqrt_hz(self.position_asd), ..Default::default() }
    }
}

fn run_edsr(cfg: &ExperimentConfig, seed: SeedSpec) -> Result<Outcome, RunError> {
    let p: QubitParams = params(&cfg.params)?;
    let shots = cfg.shots.unwrap_or(200);
    let u = UnitSystem::default();
    let m = p.model(&u);
    let rabi = measure_rabi_frequency(&m, p.amplitude_nm, 400)?;
    let analytic = u.field_to_energy(p.amplitude_nm * p.gradient) / (2.0 * PLANCK_UEV_NS);
    let start = EdsrDrive::resonant(&m, FRAC_PI_2, p.amplitude_nm, Envelope::Hann)?;
    let (drive, noiseless) = calibrate_edsr(&m, &start, FRAC_PI_2, p.calibration_budget)?;
    let r = simulate_edsr(&m, &drive, FRAC_PI_2, &p.noise(), shots, seed)?;
    let rows = [
        ("rabi_MHz", rabi * 1e3),
        ("rabi_analytic_MHz", analytic * 1e3),
        ("rabi_relative_error", rabi / analytic - 1.0),
        ("gate_ns", drive.duration),
        ("noiseless_fidelity", noiseless),
        ("fidelity", r.fidelity),
        ("stderr", r.stderr),
        ("leakage", r.leakage),
    ];
    let results = rows.iter().map(|(k, v)| (k.to_string(), Value::from(*v))).collect();
    Ok(Outcome { params: to_table(&p), shots: Some(shots), results, csv: metric_csv(&rows), extra: vec![] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CzParams {
    #[serde(rename = "valley_splitting_ueV")]
    pub valley_splitting: f64,
    #[serde(rename = "j_hold_ueV")]
    pub j_hold: f64,
    /// Relative search span around πħ/J for the hold time.
    pub hold_span: f64,
    /// Target-qubit settings for the CNOT rotations.
    pub target: QubitParams,
}

impl Default for CzParams {
    fn default() -> Self {
        Self {
            valley_splitting: 30.0,
            j_hold: crate::gatesim::DEFAULT_J_HOLD,
            hold_span: 0.2,
            target: QubitParams::default(),
        }
    }
}

fn cz_setup(p: &CzParams) -> Result<(TwoQubitModel, DistancePulse), RunError> {
    let m = TwoQubitModel::manipulation_zone(p.valley_splitting);
    let start = DistancePulse::for_hold(&m, p.j_hold)?;
    let (pulse, _) = optimize_hold(&m, &start, p.hold_span)?;
    Ok((m, pulse))
}

fn run_cz(cfg: &ExperimentConfig, seed: SeedSpec) -> Result<Outcome, RunError> {
    let p: CzParams = params(&cfg.params)?;
    let shots = cfg.shots.unwrap_or(300);
    let (m, pulse) = cz_setup(&p)?;
    let r = simulate_cz(&m, &pulse, shots, seed)?;
    let pi = pi_hold_time(p.j_hold);
    let rows = [
        ("hold_ns", r.hold),
        ("pi_hold_ns", pi),
        ("hold_relative_offset", r.hold / pi - 1.0),
        ("noiseless_fidelity", r.noiseless_fidelity),
        ("fidelity", r.report.fidelity),
        ("stderr", r.report.stderr),
        ("leakage", r.report.leakage),
        ("g1_re", r.g1[0]),
        ("g1_im", r.g1[1]),
        ("g2", r.g2),
        ("d_hold_nm", pulse.d_hold),
        ("d_far_nm", pulse.d_far),
    ];
    let results = rows.iter().map(|(k, v)| (k.to_string(), Value::from(*v))).collect();
    let mut pt = to_table(&p);
    pt.remove("target");
    Ok(Outcome { params: pt, shots: Some(shots), results, csv: metric_csv(&rows), extra: vec![] })
}

fn run_cnot(cfg: &ExperimentConfig, seed: SeedSpec) -> Result<Outcome, RunError> {
    let p: CzParams = params(&cfg.params)?;
    let shots = cfg.shots.unwrap_or(100);
    let (m, pulse) = cz_setup(&p)?;
    let target = p.target.model(&UnitSystem::default());
    let r = simulate_cnot_sequence(&m, &pulse, &target, p.target.amplitude_nm, &p.target.noise(), shots, seed)?;
    let mut csv = String::from("stage,fidelity,stderr,leakage,shots\n");
    for (name, c) in ["ry_minus", "cz", "ry_plus"].iter().zip(&r.constituents) {
        csv.push_str(&report_row(name, c));
    }
    csv.push_str(&report_row("sequence", &r.sequence));
    let results = table! {
        "sequence_fidelity" => r.sequence.fidelity,
        "sequence_stderr" => r.sequence.stderr,
        "composite_fidelity" => r.synthesis.composite_fidelity,
        "unitary_error" => r.synthesis.unitary_error,
    };
    Ok(Outcome { params: to_table(&p), shots: Some(shots), results, csv, extra: vec![] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct YieldParams {
    pub ensemble: usize,
    #[serde(rename = "mean_splitting_ueV")]
    pub mean_splitting: f64,
    pub correlation_length_nm: f64,
    pub threshold: f64,
    pub qubit: QubitParams,
}

impl Default for YieldParams {
    fn default() -> Self {
        let d = YieldOptions::default();
        Self {
            ensemble: d.ensemble,
            mean_splitting: d.mean_splitting,
            correlation_length_nm: d.correlation_length,
            threshold: d.threshold,
            qubit: QubitParams { calibration_budget: d.calibration_budget, ..Default::default() },
        }
    }
}

fn run_yield(cfg: &ExperimentConfig, seed: SeedSpec) -> Result<Outcome, RunError> {
    let p: YieldParams = params(&cfg.params)?;
    let shots = cfg.shots.unwrap_or(0);
    let base = p.qubit.model(&UnitSystem::default());
    let opts = YieldOptions {
        ensemble: p.ensemble,
        threshold: p.threshold,
        mean_splitting: p.mean_splitting,
        correlation_length: p.correlation_length_nm,
        amplitude: p.qubit.amplitude_nm,
        calibration_budget: p.qubit.calibration_budget,
        noise: p.qubit.noise(),
        shots,
        ..Default::default()
    };
    let r = valley_yield(&base, &opts, seed)?;
    let mut csv = String::from("draw,fidelity,position_nm\n");
    for (k, (f, x)) in r.fidelities.iter().zip(&r.positions).enumerate() {
        csv.push_str(&format!("{k},{f},{x}\n"));
    }
    let results = table! {
        "fraction" => r.fraction,
        "successes" => r.successes as i64,
        "ensemble" => r.ensemble as i64,
        "wilson_low" => r.wilson_low,
        "wilson_high" => r.wilson_high,
    };
    Ok(Outcome { params: to_table(&p), shots: Some(shots), results, csv, extra: vec![] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JdParams {
    pub t0_ns: f64,
    pub t1_ns: f64,
    pub frames: usize,
    #[serde(rename = "j_hold_ueV")]
    pub j_hold: f64,
    pub approach: ApproachSpec,
    pub solver: TwoElectronParams,
}

impl Default for JdParams {
    fn default() -> Self {
        Self {
            t0_ns: 78.0,
            t1_ns: 85.5,
            frames: 8,
            j_hold: crate::gatesim::DEFAULT_J_HOLD,
            approach: ApproachSpec::default(),
            solver: TwoElectronParams::default(),
        }
    }
}

fn run_jd(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let p: JdParams = params(&cfg.params)?;
    let times = p.approach.frame_times(p.t0_ns, p.t1_ns, p.frames);
    let c = p.approach.curve(&times, &p.solver)?;
    let mut buf = Vec::new();
    c.write_csv(&mut buf).map_err(RunError::Output)?;
    let mut results = table! {
        "points" => c.points.len() as i64,
        "merged_frames" => c.merged_frames.len() as i64,
        "unresolved_frames" => c.unresolved_frames.len() as i64,
        "fit_j_ref_ueV" => c.fit.j_ref,
        "fit_d_ref_nm" => c.fit.d_ref,
        "fit_decay_nm" => c.fit.decay,
        "fit_r_squared" => c.fit.r_squared,
    };
    if let Some(d) = c.hold_distance(p.j_hold) {
        results.insert("hold_distance_nm".into(), Value::from(d));
    }
    Ok(Outcome {
        params: to_table(&p),
        shots: None,
        results,
        csv: String::from_utf8(buf).expect("csv is utf-8"),
        extra: vec![],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleParams {
    pub rows: usize,
    pub cols: usize,
    /// `[row, col]` pairs.
    pub faulty: Vec<[usize; 2]>,
    pub order: VisitOrder,
    pub timing: Timing,
    pub row_stagger_ns: f64,
}

impl Default for CycleParams {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 3,
            faulty: vec![],
            order: VisitOrder::default(),
            timing: Timing::default(),
            row_stagger_ns: 0.0,
        }
    }
}

fn run_cycle(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let p: CycleParams = params(&cfg.params)?;
    let faulty: Vec<CellId> = p.faulty.iter().map(|[r, c]| CellId::new(*r, *c)).collect();
    let grid = UnitCellGrid::new(p.rows, p.cols, &faulty)?;
    let cycle = plan_cycle_staggered(&grid, p.order, &p.timing, p.row_stagger_ns)?;
    let report = cycle_time(&cycle.schedule, &p.timing);
    let mut buf = Vec::new();
    cycle.schedule.write_csv(&mut buf).map_err(RunError::Output)?;
    let mut results = table! {
        "duration_ns" => report.duration_ns,
        "shuttle_um" => report.shuttle_um,
        "shuttle_error" => report.shuttle_error,
        "worst_qubit_error" => report.worst_qubit_error,
        "stabilizers" => cycle.stabilizers.len() as i64,
        "conflicts" => 0i64,
        "degenerate" => cycle.degenerate,
        "operable_qubits" => grid.operable_qubits() as i64,
    };
    let phases: Table = report.phases.iter().map(|(k, v)| (format!("{k}_ns"), Value::from(*v))).collect();
    results.insert("phases".into(), Value::Table(phases));
    let omitted: Vec<Value> = cycle.omitted.iter().map(|c| Value::from(vec![c.row as i64, c.col as i64])).collect();
    results.insert("omitted".into(), Value::Array(omitted));
    let weights: Vec<Value> = cycle.stabilizers.iter().map(|s| Value::from(s.weight() as i64)).collect();
    results.insert("weights".into(), Value::Array(weights));
    Ok(Outcome {
        params: to_table(&p),
        shots: None,
        results,
        csv: String::from_utf8(buf).expect("csv is utf-8"),
        extra: vec![("timeline.toml".into(), cycle.schedule.to_string())],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WiringParams {
    #[serde(alias = "N")]
    pub cells: usize,
    pub coax_budget: usize,
}

impl Default for WiringParams {
    fn default() -> Self {
        Self { cells: 72, coax_budget: crate::archsched::DEFAULT_COAX_BUDGET }
    }
}

fn run_wiring(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let p: WiringParams = params(&cfg.params)?;
    let b = crate::archsched::SignalBudget { coax_budget: p.coax_budget, ..signal_count(p.cells) };
    let mut csv = String::from("cells,ac,dc,fits\n");
    for n in 0..=p.cells {
        let s = signal_count(n);
        csv.push_str(&format!("{n},{},{},{}\n", s.ac, s.dc, s.ac <= p.coax_budget));
    }
    let mut results = table! {
        "AC" => b.ac as i64,
        "DC" => b.dc as i64,
        "readout_lines" => b.readout_lines as i64,
        "fits" => b.fits(),
    };
    if let Some(n) = max_unit_cells(p.coax_budget) {
        results.insert("max_unit_cells".into(), Value::from(n as i64));
    }
    Ok(Outcome { params: to_table(&p), shots: None, results, csv, extra: vec![] })
}

/// Runs the experiment in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let seed = SeedSpec::new(cfg.seed);
    match cfg.kind.as_str() {
        "shuttle-straight" => run_shuttle(cfg, false),
        "shuttle-corner" => run_shuttle(cfg, true),
        "init-readout" => run_init(cfg, seed),
        "edsr" => run_edsr(cfg, seed),
        "cz" => run_cz(cfg, seed),
        "cnot" => run_cnot(cfg, seed),
        "valley-yield" => run_yield(cfg, seed),
        "j-of-d" => run_jd(cfg),
        "surface-cycle" => run_cycle(cfg),
        "wiring" => run_wiring(cfg),
        k => Err(RunError::Config(format!("unknown experiment kind `{k}`"))),
    }
}

/// Files written by [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Report text and file stem for a finished experiment.
pub fn render_report(cfg: &ExperimentConfig, outcome: &Outcome) -> (String, String) {
    let mut resolved = table! {
        "kind" => cfg.kind.clone(),
        "seed" => cfg.seed as i64,
    };
    if let Some(s) = outcome.shots {
        resolved.insert("shots".into(), Value::from(s as i64));
    }
    resolved.insert("params".into(), Value::Table(outcome.params.clone()));
    let config_text = toml::to_string(&resolved).expect("config serializes");
    let digest = Sha256::digest(config_text.as_bytes());
    let hash: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    let stem = format!("{}-{hash}", cfg.kind);

    let mut files = vec![Value::from(format!("{stem}.csv"))];
    files.extend(outcome.extra.iter().map(|(s, _)| Value::from(format!("{stem}-{s}"))));
    let mut report = Table::new();
    report.insert("crate_version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    report.insert("config_sha256".into(), Value::from(format!("{digest:x}")));
    report.insert("config".into(), Value::Table(resolved));
    report.insert("results".into(), Value::Table(outcome.results.clone()));
    report.insert("outputs".into(), Value::Array(files));
    (toml::to_string(&report).expect("report serializes"), stem)
}

/// Loads, runs and writes one experiment.
pub fn run(config_path: &Path, overrides: &Overrides) -> Result<RunOutput, RunError> {
    let mut cfg = load_config(config_path)?;
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(s) = overrides.shots {
        cfg.shots = Some(s);
    }
    if let Some(o) = &overrides.out {
        cfg.out = o.clone();
    }
    let outcome = execute(&cfg)?;
    let (report, stem) = render_report(&cfg, &outcome);
    std::fs::create_dir_all(&cfg.out).map_err(RunError::Output)?;
    let report_path = cfg.out.join(format!("{stem}.toml"));
    let csv_path = cfg.out.join(format!("{stem}.csv"));
    std::fs::write(&report_path, report).map_err(RunError::Output)?;
    std::fs::write(&csv_path, &outcome.csv).map_err(RunError::Output)?;
    let mut files = vec![csv_path];
    for (suffix, text) in &outcome.extra {
        let p = cfg.out.join(format!("{stem}-{suffix}"));
        std::fs::write(&p, text).map_err(RunError::Output)?;
        files.push(p);
    }
    Ok(RunOutput { report: report_path, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<ExperimentConfig, RunError> {
        parse_config(text.parse().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?)
    }

    #[test]
    fn catalog_has_ten_kinds_and_parses() {
        let text = list_experiments();
        let t: Table = text.parse().unwrap();
        let list = t["experiment"].as_array().unwrap();
        assert_eq!(list.len(), 10);
        for e in list {
            let kind = e["kind"].as_str().unwrap();
            let c = e["criterion"].as_integer().unwrap();
            assert!((1..=10).contains(&c));
            assert!(cfg(&format!("kind = \"{kind}\"")).is_ok());
        }
    }

    #[test]
    fn wiring_results() {
        let c = cfg("kind = \"wiring\"\n[params]\nN = 72\n").unwrap();
        let o = execute(&c).unwrap();
        assert_eq!(o.results["AC"].as_integer(), Some(1012));
        assert_eq!(o.results["DC"].as_integer(), Some(220));
        assert_eq!(o.results["max_unit_cells"].as_integer(), Some(71));
        assert_eq!(o.csv.lines().count(), 74);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        for text in [
            "kind = \"wiring\"\ncolour = 1",
            "kind = \"wiring\"\n[params]\ncells = 3\nvolts = 2",
            "kind = \"teleport\"",
            "kind = ",
        ] {
            let r = cfg(text).and_then(|c| execute(&c));
            assert_eq!(r.unwrap_err().exit_code(), 2, "{text}");
        }
    }

    #[test]
    fn exit_codes_by_failure() {
        let c = cfg("kind = \"surface-cycle\"\n[params]\nrow_stagger_ns = 100.0\n").unwrap();
        assert_eq!(execute(&c).unwrap_err().exit_code(), 4);
        let c = cfg("kind = \"surface-cycle\"\n[params]\nrows = 2\nfaulty = [[5, 0]]\n").unwrap();
        assert_eq!(execute(&c).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn includes_merge_with_local_override() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("base.toml"),
            "kind = \"wiring\"\nseed = 4\n[params]\ncells = 10\ncoax_budget = 50\n",
        )
        .unwrap();
        let top = dir.path().join("top.toml");
        std::fs::write(&top, "include = [\"base.toml\"]\n[params]\ncells = 3\n").unwrap();
        let c = load_config(&top).unwrap();
        assert_eq!(c.seed, 4);
        let p: WiringParams = params(&c.params).unwrap();
        assert_eq!(p, WiringParams { cells: 3, coax_budget: 50 });
    }

    #[test]
    fn report_names_follow_config() {
        let a = cfg("kind = \"wiring\"\n[params]\ncells = 3\n").unwrap();
        let b = cfg("kind = \"wiring\"\n[params]\ncells = 4\n").unwrap();
        let (ra, sa) = render_report(&a, &execute(&a).unwrap());
        let (ra2, sa2) = render_report(&a, &execute(&a).unwrap());
        let (_, sb) = render_report(&b, &execute(&b).unwrap());
        assert_eq!((ra, &sa), (ra2, &sa2));
        assert_ne!(sa, sb);
        assert!(sa.starts_with("wiring-"));
    }
}
