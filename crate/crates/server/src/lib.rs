//! The scan server.
//!
//! Frames arrive over TCP, are authenticated with the per-client key, pass
//! the firewall rules and are dispatched: scan requests join a bounded FIFO
//! queue served by worker threads, and result requests poll the job store
//! by token.

pub mod config;
pub mod credentials;
pub mod firewall;
pub mod jobs;
pub mod net;
pub mod ratelimit;
pub mod service;
pub mod update;

pub use config::ServerConfig;
pub use firewall::{verify_request, Action, FirewallRule, Verdict};
pub use jobs::{FetchOutcome, JobManager, JobState, ScanJob};
pub use net::{serve, RunningServer};
pub use ratelimit::{apply_rate_limit, RateLimit};
pub use service::{Response, Server};
pub use update::{run_update, UpdateError, UpdateSummary};
