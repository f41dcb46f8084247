use thiserror::Error;

/// Errors raised across the library and the command-line harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameters outside their admissible domain.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input to an operation (index out of range, resolution mismatch, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// The wavelet cascade could not be tabulated to tolerance.
    #[error("wavelet construction failed: {0}")]
    Construction(String),

    /// A prior draw was asked for scales it never sampled.
    #[error("truncation level {requested} exceeds the depth cap {cap} of the draw")]
    Truncation { requested: u32, cap: u32 },

    /// Iterative solver did not reach the requested tolerance.
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// Any other floating-point failure (non-finite values, breakdowns).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Degenerate estimator input, e.g. all importance weights underflow.
    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for configuration/usage problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::Truncation { .. } | Error::Io(_) | Error::Json(_) => 2,
            Error::Construction(_)
            | Error::NonConvergence { .. }
            | Error::Numerical(_)
            | Error::Estimation(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
