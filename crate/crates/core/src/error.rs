//! Error taxonomy shared by all modules.
//!
//! Variants map onto the CLI exit-code contract: configuration problems
//! (exit 2), numeric failures (exit 3), and physics failures (exit 4).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration, geometry, or inputs.
    #[error("config: {0}")]
    Config(String),

    /// A queried value fell outside a sampled or valid range.
    #[error("{what} = {value:.6e} outside range [{min:.6e}, {max:.6e}]")]
    OutOfRange {
        what: String,
        value: f64,
        min: f64,
        max: f64,
    },

    /// An iterative solver failed to reach its tolerance.
    #[error("{context}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    /// Other numeric failure (degenerate input, zero field, ...).
    #[error("numeric: {0}")]
    Numeric(String),

    /// Physically meaningless result (no guided mode, no phase matching, ...).
    #[error("physics: {0}")]
    Physics(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn physics(msg: impl Into<String>) -> Self {
        Error::Physics(msg.into())
    }

    pub fn out_of_range(what: impl Into<String>, value: f64, min: f64, max: f64) -> Self {
        Error::OutOfRange {
            what: what.into(),
            value,
            min,
            max,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
