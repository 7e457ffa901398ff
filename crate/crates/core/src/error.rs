use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("speed ratio must be strictly between 0 and 1 (got {0})")]
    UnitSpeedRatio(f64),

    #[error("target side assignment violated: {0}")]
    AssignmentViolation(&'static str),

    #[error("innovation covariance is numerically singular (condition number {0:.3e})")]
    SingularInnovation(f64),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty trace: nothing to render")]
    EmptyTrace,
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
