use thiserror::Error;

/// Errors raised by game construction, learning and experiment execution.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("innovation covariance is numerically singular (condition estimate {condition:.3e})")]
    SingularInnovation { condition: f64 },

    #[error("joint action space of {size} exceeds the enumeration cap of {cap}")]
    JointSpaceTooLarge { size: u128, cap: u128 },

    #[error("{0}")]
    Empty(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
