//! The credentials file: a JSON array of `{client_id, salt, key}` with hex
//! salt and derived key. Secrets themselves are never stored.

use std::path::Path;

use pvcscan_protocol::{derive_client_key, ClientCredential, DEFAULT_ITERATIONS, KEY_LEN, SALT_LEN};
use rand::RngCore;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CredentialRecord {
    pub client_id: String,
    pub salt: String,
    pub key: String,
}

impl CredentialRecord {
    pub fn to_credential(&self) -> anyhow::Result<ClientCredential> {
        let salt: [u8; SALT_LEN] = hex::decode(&self.salt)?
            .try_into()
            .map_err(|_| anyhow::anyhow!("{}: salt must be {SALT_LEN} bytes", self.client_id))?;
        let key: [u8; KEY_LEN] = hex::decode(&self.key)?
            .try_into()
            .map_err(|_| anyhow::anyhow!("{}: key must be {KEY_LEN} bytes", self.client_id))?;
        Ok(ClientCredential::from_key(&self.client_id, salt, key))
    }
}

pub fn load_credentials(path: &Path) -> anyhow::Result<Vec<ClientCredential>> {
    read_records(path)?.iter().map(CredentialRecord::to_credential).collect()
}

fn read_records(path: &Path) -> anyhow::Result<Vec<CredentialRecord>> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(serde_json::from_str(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(anyhow::anyhow!("{}: {e}", path.display())),
    }
}

/// A freshly provisioned client: what the client needs, and what the server keeps.
pub struct NewClient {
    pub secret: String,
    pub salt_hex: String,
    pub record: CredentialRecord,
}

pub fn provision(client_id: &str) -> NewClient {
    let mut rng = rand::thread_rng();
    let mut secret = [0u8; 24];
    let mut salt = [0u8; SALT_LEN];
    rng.fill_bytes(&mut secret);
    rng.fill_bytes(&mut salt);
    let secret = hex::encode(secret);
    let key = derive_client_key(secret.as_bytes(), &salt, DEFAULT_ITERATIONS).expect("valid inputs");
    NewClient {
        salt_hex: hex::encode(salt),
        record: CredentialRecord {
            client_id: client_id.to_string(),
            salt: hex::encode(salt),
            key: hex::encode(key),
        },
        secret,
    }
}

/// Provisions `client_id` and appends it to the file. Existing ids are refused.
pub fn add_client(path: &Path, client_id: &str) -> anyhow::Result<NewClient> {
    anyhow::ensure!(!client_id.is_empty(), "client id must not be empty");
    let mut records = read_records(path)?;
    anyhow::ensure!(
        records.iter().all(|r| r.client_id != client_id),
        "client {client_id} already exists"
    );
    let new = provision(client_id);
    records.push(new.record.clone());
    std::fs::write(path, serde_json::to_string_pretty(&records)?)?;
    Ok(new)
}
