use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("horizon {t} exceeds cap {cap}: refusing to enumerate {count} paths")]
    HorizonCap { t: usize, cap: usize, count: u128 },

    #[error("exact mode is not available for {0}")]
    UnsupportedMode(String),

    #[error("cannot mix exact and approximate probabilities")]
    MixedModes,

    #[error("parameter outside the admissible regime: {0}")]
    Regime(String),

    #[error("level law is not normalizable: {0}")]
    NotNormalizable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("not enough samples: need at least {need}, got {got}")]
    InsufficientSamples { need: usize, got: usize },
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidArgument(msg.into())
    }
}
