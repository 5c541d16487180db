use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported root system {family}{rank}: {reason}")]
    UnsupportedRank {
        family: char,
        rank: usize,
        reason: &'static str,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("group of order {order} exceeds the enumeration cap {cap}; use the determinant specializations")]
    GroupTooLarge { order: u128, cap: u128 },
    #[error("{what} cap exceeded: {value} > {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },
    #[error("kernel is not declared symmetric about zero")]
    AsymmetricKernel,
    #[error("kernel registration failed: {0}")]
    KernelCheck(String),
    #[error("point is not strictly inside the chamber: {0}")]
    NotInterior(String),
    #[error("point is outside the closed chamber: {0}")]
    OutsideChamber(String),
    #[error("step set is not symmetric under the Weyl group")]
    AsymmetricStepSet,
    #[error("step set is not reflectable: step {0:?} can jump across a reflecting hyperplane")]
    NonReflectable(Vec<i64>),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors caused by the numerics rather than by the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}
