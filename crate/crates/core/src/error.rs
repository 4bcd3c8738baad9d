use thiserror::Error;

/// Errors raised by state construction, operator validation and the
/// metrology routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |A - A^H| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("site {0} listed more than once")]
    SiteCollision(usize),

    #[error("site {site} out of range for {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("global dimension {dim} exceeds the supported cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error(
        "local term {index} does not square to a multiple of identity (deviation {deviation:e})"
    )]
    NotSquareIdentity { index: usize, deviation: f64 },

    #[error("local term {index} is not traceless (trace {trace:e})")]
    NotTraceless { index: usize, trace: f64 },

    #[error("separable bound vanishes: every local term is proportional to the identity")]
    TrivialHamiltonian,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed matrix document: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
