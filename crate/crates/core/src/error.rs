//! Crate-wide error type.

/// Errors surfaced by kernels, oracles, solvers, and the run loop.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    #[error("scalar root solve failed after {iters} iterations: residual {residual:.3e} > tolerance {tolerance:.3e}")]
    RootSolveFailed {
        iters: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("component index {index} out of range (N = {count})")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("step certificate failed: stationarity residual {residual:.6e} vs nu {nu:.6e}, sufficient decrease {}", if *.decrease_ok { "held" } else { "violated" })]
    CertificateFailed {
        residual: f64,
        nu: f64,
        decrease_ok: bool,
    },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("trace parse error: {0}")]
    TraceParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
