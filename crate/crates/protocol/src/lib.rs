//! Sealed, framed messages between scan clients and the scan server.
//!
//! Every message is a length-prefixed frame whose payload is AES-128-GCM
//! sealed under a per-client key derived from a shared secret and salt.
//! Receivers check, in order, the tag, that the sealed client id equals the
//! cleartext one, the timestamp window and the sequence number.

pub mod error;
pub mod frame;
pub mod kdf;
pub mod message;
pub mod seal;

pub use error::{FrameError, KeyError, OpenError};
pub use frame::{read_frame, Envelope, MsgType, MAX_FRAME_LEN, NONCE_LEN, PROTOCOL_VERSION, TAG_LEN};
pub use kdf::{derive_client_key, DEFAULT_ITERATIONS, KEY_LEN, SALT_LEN};
pub use message::{client_check_echo, MessageBody, Payload};
pub use seal::{
    open_message, open_response, random_nonce, seal_message, seal_with_nonce, unix_now, unseal_payload, BlockState,
    ClientCredential, Opened, DEFAULT_DELTA_T,
};
