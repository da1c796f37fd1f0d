use thiserror::Error;

/// Errors raised by configuration checks and precondition violations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 3 (got {0})")]
    Dimension(usize),

    #[error("horizon must be at least 1 step")]
    ZeroHorizon,

    #[error("horizon {horizon} too large for packed site keys in dimension {dimension}")]
    HorizonTooLarge { dimension: usize, horizon: u64 },

    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("target set is empty")]
    EmptyTargetSet,

    #[error("cap {cap} exceeds horizon {horizon}")]
    CapExceedsHorizon { cap: u64, horizon: u64 },

    #[error("out-of-order step: expected time {expected}, got {got}")]
    OutOfOrder { expected: u64, got: u64 },

    #[error("cap board covers {cap} steps but the analysis board covers {horizon}")]
    CapShorterThanHorizon { cap: u64, horizon: u64 },

    #[error("cap board is not an extension of the analysis board")]
    NotAnExtension,

    #[error("probability {0} outside the open interval (0, 1)")]
    Probability(f64),

    #[error("tolerance {0} is below the supported floor of 1e-10")]
    Tolerance(f64),

    #[error("{name} = {value} is outside its domain: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid experiment plan: {0}")]
    Plan(String),

    #[error("quadrature did not reach tolerance {tolerance} (last change {change})")]
    Quadrature { tolerance: f64, change: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
