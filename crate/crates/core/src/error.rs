use thiserror::Error;

/// Errors raised by the simulation, estimation and harness layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("input field occupies both sidebands; the shifting scheme needs a single occupied mode")]
    BothSidebandsOccupied,

    #[error("too few samples: need at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("detector saturated: click fraction {0} cannot be inverted")]
    Saturated(f64),

    #[error("records do not match: {0}")]
    Mismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Stable machine-readable tag for this error, used in CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::BothSidebandsOccupied => "both_sidebands_occupied",
            Error::TooFewSamples { .. } => "too_few_samples",
            Error::Saturated(_) => "saturated",
            Error::Mismatch(_) => "mismatch",
            Error::Precondition(_) => "precondition",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
