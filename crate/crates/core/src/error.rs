//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the operation's domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    /// The adaptive integrator could not continue (step-size underflow,
    /// step budget exhausted). Carries the last valid state.
    #[error("integration error at r={r}, h={h}: {reason}")]
    Integration { r: f64, h: f64, reason: String },

    /// An iterative construction failed to converge.
    #[error("convergence error: {0}")]
    Convergence(String),

    /// A bisection or bracketing search could not be set up or completed.
    #[error("search error: {0}")]
    Search(String),

    /// A quadrature did not reach the requested tolerance.
    #[error("quadrature error: {0}")]
    Quadrature(String),

    /// A least-squares fit did not produce a trustworthy estimate.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// An internal consistency check failed (e.g. a monotone iterate left
    /// its sub/supersolution bracket).
    #[error("consistency error: {0}")]
    Consistency(String),

    /// Sample grid too coarse for the requested finite-difference check.
    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
