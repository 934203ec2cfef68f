use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by pattern generation, analysis and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate in point {0:?}")]
    NonFinite(Vec<f64>),

    #[error("point {0:?} lies outside the domain")]
    OutOfDomain(Vec<f64>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A radius field produced a non-positive or non-finite threshold.
    #[error("radius field returned {radius} at {at:?}; thresholds must be positive and finite")]
    RadiusContract { radius: f64, at: Vec<f64> },

    #[error("grid too large: {cells_per_axis:?} cells per axis exceeds the cap ({reason})")]
    GridTooLarge {
        cells_per_axis: Vec<usize>,
        reason: String,
    },

    #[error("point index overflow: more than {0} points")]
    IndexOverflow(usize),

    #[error("accepted {accepted} points, above the packing cap {cap}")]
    PackingCapExceeded { accepted: usize, cap: usize },

    #[error("target acceleration {alpha} is not bracketed: {diagnosis}")]
    Unbracketed { alpha: f64, diagnosis: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
