use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("secret must not be empty")]
    EmptySecret,
    #[error("salt must be 16 bytes, got {0}")]
    SaltLength(usize),
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error("salt is not valid hex: {0}")]
    SaltHex(String),
}

/// Wire-level decoding failures. A frame that fails here is dropped without
/// a reply.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame truncated: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("frame of {0} bytes exceeds the size limit")]
    TooLarge(usize),
    #[error("unsupported protocol version {0}")]
    Version(u8),
    #[error("unknown message type {0}")]
    MsgType(u8),
    #[error("client id is not UTF-8")]
    ClientId,
    #[error("{0} trailing bytes after frame")]
    Trailing(usize),
}

/// Reasons `open_message` refuses an envelope, in check order.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpenError {
    #[error("authentication tag does not verify")]
    TagInvalid,
    #[error("payload is not a valid message: {0}")]
    Malformed(String),
    #[error("impersonation: header id {header:?} but payload id {payload:?}")]
    Impersonation { header: String, payload: String },
    #[error("stale timestamp {ts} (now {now}, window {window}s)")]
    Stale { ts: i64, now: i64, window: u64 },
    #[error("replayed sequence number {sn} (last accepted {last})")]
    Replay { sn: u64, last: u64 },
    #[error("response sequence number {got} does not echo request {expected}")]
    SequenceMismatch { expected: u64, got: u64 },
}

impl OpenError {
    /// Short stable code used in `ProtocolError` replies and logs.
    pub fn code(&self) -> &'static str {
        match self {
            OpenError::TagInvalid => "tag-invalid",
            OpenError::Malformed(_) => "malformed",
            OpenError::Impersonation { .. } => "impersonation",
            OpenError::Stale { .. } => "stale-timestamp",
            OpenError::Replay { .. } => "replay",
            OpenError::SequenceMismatch { .. } => "sequence-mismatch",
        }
    }
}
