use alloc::string::String;

use thiserror::Error;

/// Errors raised by the algebra, integration, model and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("slot {slot} out of range for a layout with {factors} factors")]
    SlotOutOfRange { slot: usize, factors: usize },
    #[error("invalid slot selection: {0}")]
    InvalidSelection(String),
    #[error("operator is not Hermitian (max |M - M^dag| = {0:e})")]
    NotHermitian(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error(
        "truncation guard tripped: top Fock level of factor `{label}` holds population {population:e} at t = {time}"
    )]
    Truncation { label: String, population: f64, time: f64 },
    #[error("step size underflow at t = {time} (h = {step:e})")]
    StepUnderflow { time: f64, step: f64 },
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("dimension {dim} exceeds the dense oracle cap {cap}")]
    OracleCap { dim: usize, cap: usize },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("analysis window too short: {samples} samples (need at least {required})")]
    WindowTooShort { samples: usize, required: usize },
    #[error("missing trajectory column `{0}`")]
    MissingColumn(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;
