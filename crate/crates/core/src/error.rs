use thiserror::Error;

/// Errors raised by the simulator and its tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("event (t={t}, x={x}) lies on or beyond the horizon x = |t|")]
    Horizon { t: f64, x: f64 },

    #[error("generator is singular at u = {u} (|D| = {denominator:e})")]
    Singularity { u: f64, denominator: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("numerical instability detected at step {step} (t = {time})")]
    Instability { step: usize, time: f64 },

    #[error("characteristic trace from x = {x} left the valid coefficient domain")]
    OracleCoverage { x: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Instability { .. } => 3,
            Error::Domain(_)
            | Error::Horizon { .. }
            | Error::Singularity { .. }
            | Error::Config(_)
            | Error::Validation(_)
            | Error::OracleCoverage { .. } => 2,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
