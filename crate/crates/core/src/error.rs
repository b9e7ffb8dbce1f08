//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors reported by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Problem parameters violate an admissibility invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// The data do not decay enough for the requested truncation.
    #[error("truncation error: {0}")]
    Truncation(String),

    /// The assembled quadratic form failed the positive-semidefiniteness floor.
    #[error("assembly error: {message} (offending eigenvalue {eigenvalue:e})")]
    Assembly { message: String, eigenvalue: f64 },

    /// A fixed-point iteration did not converge.
    #[error("solver diverged after {iterations} iterations (last change {last_change:e})")]
    Divergence {
        iterations: usize,
        last_change: f64,
        history: Vec<f64>,
    },

    /// A descent method could not accept a step at the minimal step size.
    #[error("descent stalled after {iterations} iterations")]
    Stall { iterations: usize, history: Vec<f64> },

    /// A discretization is too coarse for the requested object.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A numerical procedure failed (quadrature, eigen-solver, factorization).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
