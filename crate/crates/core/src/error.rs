use thiserror::Error;

use crate::eigen::NotConverged;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("missing basis potential for binding {0}")]
    MissingBasis(String),
    #[error("time {t} ns outside [0, {duration}] ns")]
    TimeOutOfRange { t: f64, duration: f64 },
    #[error("program duration {duration} ns too short: {reason}")]
    DurationTooShort { duration: f64, reason: String },
    #[error("dot tracking lost at frame {frame}: {reason}")]
    TrackingLost { frame: usize, reason: String },
    #[error("point ({x}, {y}, {z}) nm lies inside a magnet")]
    InsideMagnet { x: f64, y: f64, z: f64 },
    #[error("step size too coarse: dt·|H|/ħ = {phase:.3} rad exceeds {limit} rad at step {step}")]
    StepTooCoarse { step: usize, phase: f64, limit: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("not unitary: |U†U − 1| = {0:.3e}")]
    NotUnitary(f64),
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("double-well shape: {0}")]
    WellShape(String),
    #[error(transparent)]
    Eigen(#[from] NotConverged),
    #[error("schedule conflicts: {0}")]
    ScheduleConflict(String),
    #[error("unschedulable: {0}")]
    Unschedulable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
