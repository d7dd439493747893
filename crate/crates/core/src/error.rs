use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid estimate: {0}")]
    InvalidEstimate(String),

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("scale mismatch: estimate is {estimate}, thresholds are for {thresholds}")]
    ScaleMismatch { estimate: String, thresholds: String },

    #[error("non-inferiority margin is not set")]
    MissingMargin,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("need at least {needed} posterior summaries, got {got}")]
    GridTooSmall { needed: usize, got: usize },

    #[error("template slot `{0}` has no value in this record")]
    MissingSlot(String),

    #[error("records mix effect scales ({0} and {1})")]
    MixedScales(String, String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("malformed record: {0}")]
    Malformed(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Self::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
