use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs violated a shape or value precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A loss hyperparameter is outside its admissible range.
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    /// A NaN or infinity appeared during computation.
    #[error("numeric error at {location}: {detail}")]
    Numeric { location: String, detail: String },

    /// A configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn invalid_hyperparameter(msg: impl Into<String>) -> Self {
        Error::InvalidHyperparameter(msg.into())
    }

    pub fn numeric(location: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numeric {
            location: location.into(),
            detail: detail.into(),
        }
    }
}
