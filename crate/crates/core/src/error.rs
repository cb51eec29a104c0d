use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical routine failed to reach its tolerance.
    #[error("numerical error: {message} (estimate {estimate:e})")]
    Numerical { message: String, estimate: f64 },

    /// A requested dimension exceeds the configured budget.
    #[error("resource error: dimension {dim} exceeds budget {budget}")]
    Resource { dim: usize, budget: usize },

    /// A configuration document could not be used.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, estimate: f64) -> Self {
        Error::Numerical {
            message: msg.into(),
            estimate,
        }
    }
}
