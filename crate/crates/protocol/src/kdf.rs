use hmac::{Hmac, Mac};
use sha2::Sha256;

use crate::error::KeyError;

pub const SALT_LEN: usize = 16;
pub const KEY_LEN: usize = 16;
pub const DEFAULT_ITERATIONS: u32 = 100;

/// Iterated HMAC-SHA-256 over `secret || salt`, keyed by the secret,
/// truncated to 128 bits.
///
/// This construction is a protocol constant: both ends must agree on it
/// byte for byte.
pub fn derive_client_key(
    secret: &[u8],
    salt: &[u8],
    iterations: u32,
) -> Result<[u8; KEY_LEN], KeyError> {
    if secret.is_empty() {
        return Err(KeyError::EmptySecret);
    }
    if salt.len() != SALT_LEN {
        return Err(KeyError::SaltLength(salt.len()));
    }
    if iterations == 0 {
        return Err(KeyError::ZeroIterations);
    }
    let mut state = [secret, salt].concat();
    for _ in 0..iterations {
        let mut mac = Hmac::<Sha256>::new_from_slice(secret).expect("hmac takes any key length");
        mac.update(&state);
        state = mac.finalize().into_bytes().to_vec();
    }
    let mut key = [0u8; KEY_LEN];
    key.copy_from_slice(&state[..KEY_LEN]);
    Ok(key)
}
