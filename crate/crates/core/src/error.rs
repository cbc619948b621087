//! Error types shared across the library.

use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument is structurally invalid (wrong size, wrong order, bad flag).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A bracketed root search could not find or keep a sign change.
    #[error("no root: {0}")]
    NoRoot(String),

    /// A quadrature or other numerical routine exceeded its work budget.
    #[error("numerical routine failed: {0}")]
    Numerical(String),

    /// Newton iteration failed to reach the residual target.
    #[error("solver did not converge: {context} (residual {residual:.3e} after {iterations} iterations)")]
    Convergence {
        context: String,
        residual: f64,
        iterations: usize,
    },

    /// The no-stagnation condition h_p > 0 failed during a solve or evaluation.
    #[error("stagnation: h_p <= 0 encountered at {0}")]
    Stagnation(String),

    /// Newton collapsed onto the q-independent branch even after amplitude restarts.
    #[error("trivial solution: wave amplitude below threshold after {restarts} seeded restarts")]
    TrivialCollapse { restarts: usize },

    /// A structural hypothesis the classification relies on failed numerically.
    #[error("hypothesis failure: {0}")]
    Hypothesis(String),

    /// Scenario configuration is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// Artifact I/O failed.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Artifact (de)serialization failed.
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
