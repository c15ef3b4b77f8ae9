//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by basis construction, model building, evolution and estimation.
#[derive(Debug, Error)]
pub enum Error {
    /// A size or parameter lies outside the supported range.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// Two objects that must agree in size or basis do not.
    #[error("mismatch: {0}")]
    Mismatch(String),
    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// An iterative solver failed to reach its tolerance.
    #[error("{what} did not converge (step {step}, residual {residual:.3e})")]
    Convergence { what: &'static str, step: usize, residual: f64 },
    /// A dense object would exceed the memory guard.
    #[error("memory guard: {0}")]
    MemoryGuard(String),
    /// Nothing survived a filtering step (e.g. every z_B violated the boundary rule).
    #[error("empty: {0}")]
    Empty(String),
    /// Malformed text input, with 1-based line number.
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence { .. } | Error::MemoryGuard(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
