use aes_gcm::aead::consts::U16;
use aes_gcm::aead::{Aead, KeyInit, Payload as AeadPayload};
use aes_gcm::aes::Aes128;
use aes_gcm::AesGcm;
use rand::RngCore;

use crate::error::{KeyError, OpenError};
use crate::frame::{Envelope, MsgType, NONCE_LEN, PROTOCOL_VERSION};
use crate::kdf::{derive_client_key, DEFAULT_ITERATIONS, KEY_LEN, SALT_LEN};
use crate::message::{MessageBody, Payload};

/// AES-128-GCM with a 128-bit IV.
type Cipher = AesGcm<Aes128, U16>;

pub const DEFAULT_DELTA_T: u64 = 60;

/// Per-client violation counter and block deadline (unix milliseconds).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BlockState {
    pub violations: u32,
    pub blocked_until: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientCredential {
    pub client_id: String,
    pub salt: [u8; SALT_LEN],
    pub derived_key: [u8; KEY_LEN],
    pub last_sn: u64,
    pub block_state: BlockState,
}

impl ClientCredential {
    pub fn new(client_id: impl Into<String>, secret: &[u8], salt: [u8; SALT_LEN]) -> Result<Self, KeyError> {
        let derived_key = derive_client_key(secret, &salt, DEFAULT_ITERATIONS)?;
        Ok(Self::from_key(client_id, salt, derived_key))
    }

    pub fn from_key(client_id: impl Into<String>, salt: [u8; SALT_LEN], derived_key: [u8; KEY_LEN]) -> Self {
        ClientCredential {
            client_id: client_id.into(),
            salt,
            derived_key,
            last_sn: 0,
            block_state: BlockState::default(),
        }
    }

    /// Same as [`ClientCredential::new`] with the salt given as hex.
    pub fn from_hex_salt(client_id: impl Into<String>, secret: &[u8], salt_hex: &str) -> Result<Self, KeyError> {
        let bytes = hex::decode(salt_hex.trim()).map_err(|e| KeyError::SaltHex(e.to_string()))?;
        let salt: [u8; SALT_LEN] = bytes
            .as_slice()
            .try_into()
            .map_err(|_| KeyError::SaltLength(bytes.len()))?;
        Self::new(client_id, secret, salt)
    }

    fn cipher(&self) -> Cipher {
        Cipher::new_from_slice(&self.derived_key).expect("16-byte key")
    }
}

/// A successfully opened message.
#[derive(Debug, Clone, PartialEq)]
pub struct Opened {
    pub msg_type: MsgType,
    pub body: MessageBody,
    pub sn: u64,
    pub ts: i64,
}

pub fn random_nonce() -> [u8; NONCE_LEN] {
    let mut nonce = [0u8; NONCE_LEN];
    rand::thread_rng().fill_bytes(&mut nonce);
    nonce
}

/// Seals `body` under the credential's key with a fresh random nonce.
pub fn seal_message(cred: &ClientCredential, body: &MessageBody, sn: u64, ts: i64) -> Envelope {
    seal_with_nonce(cred, body, sn, ts, random_nonce())
}

pub fn seal_with_nonce(
    cred: &ClientCredential,
    body: &MessageBody,
    sn: u64,
    ts: i64,
    nonce: [u8; NONCE_LEN],
) -> Envelope {
    let payload = Payload {
        id_b: cred.client_id.clone(),
        sn,
        ts,
        body: body.clone(),
    };
    let plaintext = serde_json::to_vec(&payload).expect("payload serializes");
    let msg_type = body.msg_type();
    let aad = Envelope::aad(PROTOCOL_VERSION, msg_type);
    let sealed = cred
        .cipher()
        .encrypt(
            (&nonce).into(),
            AeadPayload {
                msg: &plaintext,
                aad: &aad,
            },
        )
        .expect("gcm encryption is infallible for in-range lengths");
    Envelope {
        version: PROTOCOL_VERSION,
        msg_type,
        client_id_a: cred.client_id.clone(),
        nonce,
        sealed,
    }
}

/// Tag check and payload decode only. The identity, freshness and sequence
/// checks are left to the caller.
pub fn unseal_payload(env: &Envelope, cred: &ClientCredential) -> Result<Payload, OpenError> {
    let aad = Envelope::aad(env.version, env.msg_type);
    let plaintext = cred
        .cipher()
        .decrypt(
            (&env.nonce).into(),
            AeadPayload {
                msg: &env.sealed,
                aad: &aad,
            },
        )
        .map_err(|_| OpenError::TagInvalid)?;
    let payload: Payload =
        serde_json::from_slice(&plaintext).map_err(|e| OpenError::Malformed(e.to_string()))?;
    if payload.body.msg_type() != env.msg_type {
        return Err(OpenError::Malformed(format!(
            "header type {:?} but body is {:?}",
            env.msg_type,
            payload.body.msg_type()
        )));
    }
    Ok(payload)
}

fn check_identity(env: &Envelope, payload: &Payload) -> Result<(), OpenError> {
    if payload.id_b != env.client_id_a {
        return Err(OpenError::Impersonation {
            header: env.client_id_a.clone(),
            payload: payload.id_b.clone(),
        });
    }
    Ok(())
}

fn check_fresh(ts: i64, now: i64, delta_t: u64) -> Result<(), OpenError> {
    if now.abs_diff(ts) > delta_t {
        return Err(OpenError::Stale {
            ts,
            now,
            window: delta_t,
        });
    }
    Ok(())
}

/// Server-side open: tag, impersonation, freshness, replay, in that order.
/// On success the credential's `last_sn` advances to the message's `sn`.
pub fn open_message(
    env: &Envelope,
    cred: &mut ClientCredential,
    now: i64,
    delta_t: u64,
) -> Result<Opened, OpenError> {
    let payload = unseal_payload(env, cred)?;
    check_identity(env, &payload)?;
    check_fresh(payload.ts, now, delta_t)?;
    if payload.sn <= cred.last_sn {
        return Err(OpenError::Replay {
            sn: payload.sn,
            last: cred.last_sn,
        });
    }
    cred.last_sn = payload.sn;
    Ok(Opened {
        msg_type: env.msg_type,
        body: payload.body,
        sn: payload.sn,
        ts: payload.ts,
    })
}

/// Client-side open of a server reply, which must echo the request's `sn`.
pub fn open_response(
    env: &Envelope,
    cred: &ClientCredential,
    expected_sn: u64,
    now: i64,
    delta_t: u64,
) -> Result<Opened, OpenError> {
    let payload = unseal_payload(env, cred)?;
    check_identity(env, &payload)?;
    check_fresh(payload.ts, now, delta_t)?;
    if payload.sn != expected_sn {
        return Err(OpenError::SequenceMismatch {
            expected: expected_sn,
            got: payload.sn,
        });
    }
    Ok(Opened {
        msg_type: env.msg_type,
        body: payload.body,
        sn: payload.sn,
        ts: payload.ts,
    })
}

/// Current unix time in whole seconds.
pub fn unix_now() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}
