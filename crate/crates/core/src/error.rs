use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("{what} exceeds cap: {value} > {cap}")]
    CapExceeded {
        what: &'static str,
        value: u128,
        cap: u128,
    },

    #[error("index component {component} out of range for single-particle dimension {d}")]
    IndexOutOfRange { component: usize, d: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not {kind} (max deviation {deviation:e})")]
    NotSymmetric { kind: &'static str, deviation: f64 },

    #[error("state is not in the {sector} sector (deviation {deviation:e})")]
    WrongSector { sector: &'static str, deviation: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("projected product vector vanishes")]
    ZeroProjection,

    #[error("every solver start failed: {0}")]
    AllStartsFailed(String),

    #[error("no analytic bound available for this observable and partition")]
    NoAnalyticBound,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
