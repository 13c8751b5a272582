use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRANSPORT: i32 = 3;
pub const EXIT_REJECTED: i32 = 4;
pub const EXIT_MITM: i32 = 5;
pub const EXIT_POLL_LIMIT: i32 = 6;
pub const EXIT_TIMEOUT: i32 = 7;
pub const EXIT_THRESHOLD: i32 = 8;
pub const EXIT_PROTOCOL: i32 = 9;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("{0}")]
    Usage(String),
    #[error("transport failed after {attempts} attempts: {source}")]
    Transport {
        attempts: u32,
        source: std::io::Error,
    },
    #[error("rejected: {0}")]
    Rejected(String),
    #[error("server echoed client id {echoed:?}, sent {sent:?}; possible man-in-the-middle")]
    Mitm { sent: String, echoed: String },
    #[error("poll limit reached")]
    PollLimit,
    #[error("no result after waiting {0:?}")]
    Timeout(std::time::Duration),
    #[error("protocol failure: {0}")]
    Protocol(String),
}

impl ClientError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ClientError::Usage(_) => EXIT_USAGE,
            ClientError::Transport { .. } => EXIT_TRANSPORT,
            ClientError::Rejected(_) => EXIT_REJECTED,
            ClientError::Mitm { .. } => EXIT_MITM,
            ClientError::PollLimit => EXIT_POLL_LIMIT,
            ClientError::Timeout(_) => EXIT_TIMEOUT,
            ClientError::Protocol(_) => EXIT_PROTOCOL,
        }
    }
}
