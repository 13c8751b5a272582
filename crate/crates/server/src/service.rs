//! Per-frame request handling.

use std::collections::HashMap;
use std::net::IpAddr;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use pvcscan_core::{Scanner, VulnDb};
use pvcscan_protocol::{
    open_message, seal_message, unseal_payload, BlockState, ClientCredential, Envelope, MessageBody,
    OpenError,
};
use tracing::{debug, info, warn};

use crate::config::ServerConfig;
use crate::firewall::{verify_request, Verdict};
use crate::jobs::{EnqueueError, FetchOutcome, JobManager};
use crate::ratelimit::{apply_rate_limit, reset, RateLimit};

/// One reply frame, and whether the connection ends after it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub frame: Vec<u8>,
    pub close: bool,
}

pub struct Server {
    config: ServerConfig,
    credentials: HashMap<String, Mutex<ClientCredential>>,
    db: Arc<VulnDb>,
    scanner: Arc<Scanner>,
    jobs: Arc<JobManager>,
}

impl Server {
    pub fn new(config: ServerConfig, credentials: Vec<ClientCredential>, db: Arc<VulnDb>) -> Arc<Self> {
        let scanner = Arc::new(Scanner::new(db.clone(), config.pvc_concurrency));
        let jobs = JobManager::new(config.queue_capacity);
        Arc::new(Server {
            credentials: credentials
                .into_iter()
                .map(|c| (c.client_id.clone(), Mutex::new(c)))
                .collect(),
            config,
            db,
            scanner,
            jobs,
        })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn db(&self) -> &Arc<VulnDb> {
        &self.db
    }

    pub fn scanner(&self) -> &Arc<Scanner> {
        &self.scanner
    }

    pub fn jobs(&self) -> &Arc<JobManager> {
        &self.jobs
    }

    pub fn start_workers(&self) {
        self.jobs.start_workers(self.config.workers, self.scanner.clone());
    }

    /// Stops the workers and writes the cache back to the store.
    pub fn shutdown(&self) {
        self.jobs.shutdown();
        if let Err(e) = self.db.flush() {
            warn!(error = %e, "flush on shutdown failed");
        }
    }

    pub fn block_state(&self, client_id: &str) -> Option<BlockState> {
        self.credentials.get(client_id).map(|c| c.lock().unwrap().block_state)
    }

    /// Clears a client's violation history.
    pub fn reset_client(&self, client_id: &str) -> bool {
        match self.credentials.get(client_id) {
            Some(c) => {
                reset(&mut c.lock().unwrap().block_state);
                true
            }
            None => false,
        }
    }

    pub fn handle_frame(&self, frame: &[u8], peer: IpAddr) -> Option<Response> {
        self.handle_frame_at(frame, peer, SystemTime::now())
    }

    /// Decodes, authenticates, verifies and dispatches one frame. `None`
    /// means drop the connection without replying.
    pub fn handle_frame_at(&self, frame: &[u8], peer: IpAddr, now: SystemTime) -> Option<Response> {
        let since_epoch = now.duration_since(UNIX_EPOCH).unwrap_or_default();
        let now_s = since_epoch.as_secs() as i64;
        let now_ms = since_epoch.as_millis() as u64;

        let env = match Envelope::decode(frame) {
            Ok(env) => env,
            Err(e) => {
                debug!(%peer, error = %e, "undecodable frame dropped");
                return None;
            }
        };
        let Some(slot) = self.credentials.get(&env.client_id_a) else {
            debug!(%peer, client = %env.client_id_a, "unknown client dropped");
            return None;
        };
        let mut cred = slot.lock().unwrap();
        let base = self.config.block_base_secs;

        let payload = match unseal_payload(&env, &cred) {
            Ok(p) => p,
            Err(OpenError::TagInvalid) => {
                warn!(%peer, client = %env.client_id_a, "tag-invalid frame dropped");
                return None;
            }
            Err(e) => {
                warn!(%peer, client = %env.client_id_a, code = e.code(), "undecodable payload");
                apply_rate_limit(&mut cred.block_state, true, now_ms, base);
                return None;
            }
        };
        let reply = |cred: &ClientCredential, body: MessageBody| {
            let close = !matches!(
                body,
                MessageBody::ResultNotReady {} | MessageBody::ResultResponse { .. }
            );
            Some(Response {
                frame: seal_message(cred, &body, payload.sn, now_s).encode(),
                close,
            })
        };

        if let RateLimit::Blocked(until) = apply_rate_limit(&mut cred.block_state, false, now_ms, base) {
            debug!(client = %cred.client_id, until, "blocked client");
            return reply(&cred, MessageBody::reject("blocked"));
        }

        let opened = match open_message(&env, &mut cred, now_s, self.config.delta_t_secs) {
            Ok(o) => o,
            Err(e) => {
                warn!(%peer, client = %cred.client_id, code = e.code(), error = %e, "protocol violation");
                apply_rate_limit(&mut cred.block_state, true, now_ms, base);
                return reply(&cred, MessageBody::ProtocolError { code: e.code().into() });
            }
        };

        if let Verdict::Reject(reason) = verify_request(peer, &cred.client_id, true, &self.config.firewall) {
            info!(%peer, client = %cred.client_id, %reason, "firewall reject");
            return reply(&cred, MessageBody::reject(reason));
        }

        let body = match opened.body {
            MessageBody::ScanRequest { rsd } => match self.jobs.enqueue_job(rsd, &cred.client_id) {
                Ok(token) => {
                    info!(client = %cred.client_id, %token, "scan accepted");
                    MessageBody::ScanAccept {
                        token,
                        echo_client_id_a: env.client_id_a.clone(),
                    }
                }
                Err(EnqueueError::Busy) => MessageBody::reject("busy"),
            },
            MessageBody::ResultRequest { token } => {
                match self.jobs.fetch_result(&token, &cred.client_id, self.config.max_polls) {
                    FetchOutcome::Report(report) => MessageBody::ResultResponse {
                        report: (*report).clone(),
                    },
                    FetchOutcome::NotReady => MessageBody::ResultNotReady {},
                    FetchOutcome::Reject { reason, violation } => {
                        if violation {
                            warn!(client = %cred.client_id, %reason, "result request violation");
                            apply_rate_limit(&mut cred.block_state, true, now_ms, base);
                        }
                        MessageBody::reject(reason)
                    }
                }
            }
            other => {
                debug!(client = %cred.client_id, msg_type = ?other.msg_type(), "unexpected message");
                MessageBody::ProtocolError {
                    code: "unexpected-message".into(),
                }
            }
        };
        reply(&cred, body)
    }
}
