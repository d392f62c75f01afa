use thiserror::Error;

/// Failure modes shared by every engine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid switching profile: {0}")]
    InvalidProfile(String),

    #[error("integration failure at t = {time}: norm drift {drift:e} exceeds {tolerance:e}")]
    IntegrationFailure { time: f64, drift: f64, tolerance: f64 },

    #[error("truncation error: {what} (bound {bound:e})")]
    Truncation { what: String, bound: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("identity {identity} fails at k = {k}")]
    IdentityFailure { identity: String, k: u32 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the inputs rather than by a computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidProfile(_) | Error::Dimension(_)
        )
    }
}
