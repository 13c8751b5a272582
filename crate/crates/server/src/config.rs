use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::firewall::FirewallRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub port: u16,
    pub db_path: PathBuf,
    pub delta_t_secs: u64,
    pub workers: usize,
    pub pvc_concurrency: usize,
    pub queue_capacity: usize,
    pub max_polls: u32,
    pub block_base_secs: f64,
    pub credentials_file: PathBuf,
    /// How often the result cache is written back to the store.
    pub flush_interval_secs: u64,
    pub firewall: Vec<FirewallRule>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "0.0.0.0".into(),
            port: 4750,
            db_path: "pvcscan.db".into(),
            delta_t_secs: pvcscan_protocol::DEFAULT_DELTA_T,
            workers: 2,
            pvc_concurrency: 4,
            queue_capacity: 1024,
            max_polls: 100,
            block_base_secs: 2.0,
            credentials_file: "credentials.json".into(),
            flush_interval_secs: 60,
            firewall: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0} must be at least 1")]
    Zero(&'static str),
    #[error("block_base_secs must be at least 1")]
    BlockBase,
}

impl ServerConfig {
    /// Loads TOML, or JSON when the file ends in `.json`. Relative paths in
    /// the file are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse_err = |message: String| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        };
        let mut cfg: ServerConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        };
        if let Some(dir) = path.parent() {
            cfg.db_path = dir.join(&cfg.db_path);
            cfg.credentials_file = dir.join(&cfg.credentials_file);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("workers", self.workers),
            ("pvc_concurrency", self.pvc_concurrency),
            ("queue_capacity", self.queue_capacity),
            ("max_polls", self.max_polls as usize),
            ("flush_interval_secs", self.flush_interval_secs as usize),
        ] {
            if v == 0 {
                return Err(ConfigError::Zero(name));
            }
        }
        if !(self.block_base_secs >= 1.0) {
            return Err(ConfigError::BlockBase);
        }
        Ok(())
    }
}
