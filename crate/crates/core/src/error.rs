//! Error types shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors emitted by tensor, geometry, model, data and harness code.
#[derive(Debug, Error)]
pub enum Error {
    /// Two tensors (or a tensor and an expected contract) disagree on shape.
    #[error("shape mismatch in {op}: left {left:?}, right {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    /// An input value lies outside the mathematical domain of an operation.
    #[error("domain violation in {op}: value {value} outside {domain}")]
    Domain {
        op: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// An API contract was violated (e.g. backward on a non-scalar loss).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A configuration value is invalid or inconsistent.
    #[error("invalid config: {0}")]
    Config(String),

    /// A dataset record or stream is malformed.
    #[error("data error: {0}")]
    Data(String),

    /// Failed to parse a stored artifact; carries the source location.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Training diverged; carries the diagnostic context for the offending step.
    #[error("non-finite loss at step {step} (batch {batch_id}): curvature={curvature:?} temperature={temperature}")]
    NonFiniteLoss {
        step: usize,
        batch_id: String,
        curvature: Option<f64>,
        temperature: f64,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
