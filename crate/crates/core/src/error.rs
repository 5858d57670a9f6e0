use thiserror::Error;

/// Errors raised by the Burke transform library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("spin values must be -1 or +1, got {0}")]
    InvalidSpin(i64),

    #[error("certified span became empty after {applied} of {requested} applications")]
    CertificationLost { applied: u64, requested: u64 },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate window [{lo}, {hi}]")]
    DegenerateWindow { lo: f64, hi: f64 },

    #[error("bad configuration: {0}")]
    BadConfig(String),

    #[error("no coalescence within {depth} backward steps")]
    NoCoalescence { depth: usize },

    #[error("pair ({from}, {to}) is not realizable by any parameter")]
    UnrealizablePair { from: String, to: String },
}

pub type Result<T> = std::result::Result<T, Error>;
