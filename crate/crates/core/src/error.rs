use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("{what} is not Hermitian: max |m - m^H| = {deviation:e} exceeds {tol:e}")]
    NotHermitian {
        what: &'static str,
        deviation: f64,
        tol: f64,
    },

    #[error("state is not normalized: norm = {norm} (tolerance {tol:e})")]
    NotNormalized { norm: f64, tol: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error(
        "levels {first} and {second} are degenerate (gap {gap:e} <= {tol:e}); \
         Rayleigh-Schrödinger corrections are undefined"
    )]
    Degenerate {
        first: usize,
        second: usize,
        gap: f64,
        tol: f64,
    },

    #[error("order {order} exceeds the configured cap of {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("level {level} is too close to the truncation edge of a {dim}-dimensional Fock space (need level + {margin} <= {dim})")]
    Truncation { level: usize, dim: usize, margin: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
