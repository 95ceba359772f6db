use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite state at t = {t} (seed {seed}, replica {replica}, component {component}, node {node})")]
    BlowUp {
        t: f64,
        seed: u64,
        replica: u64,
        component: usize,
        node: usize,
    },

    #[error("center {xi} outside the admissible window |xi| <= {window}")]
    OutOfWindow { xi: f64, window: f64 },

    #[error("eigensolver failed for eigenvalue {index}: residual {residual:e}")]
    EigenConvergence { index: usize, residual: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("{fraction:.4} of frames had no proper center (limit {limit})")]
    TooManyImproper { fraction: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
