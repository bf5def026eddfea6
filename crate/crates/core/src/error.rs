use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Shoulder, elbow and hand do not span a plane (hand at the shoulder
    /// or elbow collinear with the reach line).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("degenerate path: start and target are {0:.3e} m apart")]
    DegeneratePath(f64),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("zero signal: speed profile has no DC component")]
    ZeroSignal,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid motion script: {0}")]
    Script(String),

    #[error("unknown target `{0}`")]
    UnknownTarget(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        Error::Parse { path: path.into(), msg: msg.to_string() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
