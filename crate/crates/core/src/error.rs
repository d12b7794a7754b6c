use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    Divergence { iteration: usize, loss: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("LP too large: {rows} rows exceeds the limit of {limit}")]
    LpTooLarge { rows: u64, limit: u64 },

    #[error("LP solver failed: {0}")]
    Solver(String),

    #[error("incentive compatibility violated by {violation:.3e} between grid points {from} and {to}")]
    IcViolation { from: usize, to: usize, violation: f64 },

    #[error("quadrature did not converge: successive refinements differ by {0:.3e}")]
    Quadrature(f64),

    #[error("no optimal reference for {0}")]
    NoReference(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        field,
        reason: reason.into(),
    }
}
