//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested physical regime is not covered by the model.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// A configuration violates an invariant (bad step size, window nesting, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A fit or estimator failed to produce a result.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A mixture fit did not converge; carries the last iterate.
    #[error("fit did not converge after {iterations} iterations (log-likelihood {log_likelihood})")]
    FitNonConvergence {
        iterations: usize,
        log_likelihood: f64,
        last_weights: Vec<f64>,
        last_background_rate: f64,
        last_single_atom_rate: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
