use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integrand returned NaN at x = {0}")]
    Evaluation(f64),
    #[error("unsupported data: {0}")]
    Unsupported(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scheme error: {0}")]
    Scheme(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
