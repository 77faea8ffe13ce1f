use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("CRB is unbounded: {0}")]
    Unbounded(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

impl From<irs_sdp::SdpError> for Error {
    fn from(e: irs_sdp::SdpError) -> Self {
        Error::Numerical(format!("SDP setup: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
