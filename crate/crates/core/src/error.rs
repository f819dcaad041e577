use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum MddError {
    /// A parameter or an evaluation point lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested operation is not defined for the given family or combination.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Data that make a closed-form estimator degenerate (e.g. infinite rate).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Too few observations for the requested estimator.
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Inconsistent arguments.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The effective-sample-size minimum was not bracketed by the grid.
    #[error("no effective sample size found on m in [0, {m_max}]; raise m_max")]
    RangeExceeded { m_max: usize },

    /// A failure inside a resampling run, tagged with the step at which it happened.
    #[error("resampling step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<MddError>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl MddError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        MddError::Domain(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        MddError::Unsupported(msg.into())
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        MddError::Step {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = MddError> = std::result::Result<T, E>;
