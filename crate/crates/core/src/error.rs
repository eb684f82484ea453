use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error in {op}: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("voltage solve failed at step {step}: {reason}")]
    VoltageSolve { step: u64, reason: String },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("profile error: {0}")]
    Profile(String),

    #[error("csv parse error: {count} bad row(s) at line(s) {lines:?}")]
    CsvRows { count: usize, lines: Vec<u64> },

    #[error("timestamps not monotone at row index {index}")]
    NonMonotone { index: usize },

    #[error("too many gaps: {missing} of {expected} samples missing")]
    TooManyGaps { missing: usize, expected: usize },

    #[error("{failed} scenario(s) failed: {details}")]
    ScenariosFailed { failed: usize, details: String },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than a failing run.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::VoltageSolve { .. }
                | Error::Calibration(_)
                | Error::ScenariosFailed { .. }
                | Error::Io { .. }
        )
    }
}
