use thiserror::Error;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or configuration, rejected before any simulation runs.
    #[error("configuration error: {0}")]
    Config(String),
    /// Proportional allocation is undefined when every channel bid is zero.
    #[error("no estimable channels: all bids are zero")]
    NoEstimableChannels,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code convention: 1 for validation errors, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::NoEstimableChannels => 1,
            Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
