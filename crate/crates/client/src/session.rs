use std::time::{Duration, SystemTime, UNIX_EPOCH};

use pvcscan_core::{Inventory, ScanReport};
use pvcscan_protocol::{
    client_check_echo, open_response, seal_message, unix_now, ClientCredential, Envelope, MessageBody,
    DEFAULT_DELTA_T,
};
use tracing::{debug, warn};

use crate::error::ClientError;
use crate::transport::{Sleeper, Transport};

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub server: String,
    pub client_id: String,
    pub secret: String,
    pub salt_hex: String,
    pub poll_interval: Duration,
    pub max_wait: Duration,
    /// Extra attempts after a transport failure.
    pub retries: u32,
    pub retry_delay: Duration,
    pub delta_t_secs: u64,
}

impl ClientConfig {
    pub fn new(server: &str, client_id: &str, secret: &str, salt_hex: &str) -> Self {
        ClientConfig {
            server: server.into(),
            client_id: client_id.into(),
            secret: secret.into(),
            salt_hex: salt_hex.into(),
            poll_interval: Duration::from_secs(5),
            max_wait: Duration::from_secs(600),
            retries: 3,
            retry_delay: Duration::from_secs(1),
            delta_t_secs: DEFAULT_DELTA_T,
        }
    }

    pub fn validate(&self) -> Result<(), ClientError> {
        if self.client_id.is_empty() || self.secret.is_empty() || self.salt_hex.is_empty() {
            return Err(ClientError::Usage("client id, secret and salt are required".into()));
        }
        if self.poll_interval < Duration::from_secs(1) {
            return Err(ClientError::Usage("poll interval must be at least 1 s".into()));
        }
        Ok(())
    }

    pub fn credential(&self) -> Result<ClientCredential, ClientError> {
        ClientCredential::from_hex_salt(&self.client_id, self.secret.as_bytes(), &self.salt_hex)
            .map_err(|e| ClientError::Usage(e.to_string()))
    }
}

fn micros_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_micros() as u64)
        .unwrap_or(1)
}

/// One client identity talking to one server.
pub struct Client<T, S> {
    config: ClientConfig,
    cred: ClientCredential,
    transport: T,
    sleeper: S,
    next_sn: u64,
}

impl<T: Transport, S: Sleeper> Client<T, S> {
    pub fn new(config: ClientConfig, transport: T, sleeper: S) -> Result<Self, ClientError> {
        config.validate()?;
        let cred = config.credential()?;
        Ok(Client {
            config,
            cred,
            transport,
            sleeper,
            // Seeded from the clock so a restarted client stays above the
            // server's last accepted value.
            next_sn: micros_now(),
        })
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn transport_mut(&mut self) -> &mut T {
        &mut self.transport
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    /// Seals `body`, sends it, and opens the reply, retrying transport
    /// failures with a fresh sequence number each time.
    pub fn request(&mut self, body: &MessageBody) -> Result<MessageBody, ClientError> {
        let mut attempt = 0;
        loop {
            attempt += 1;
            let sn = self.next_sn;
            self.next_sn += 1;
            let frame = seal_message(&self.cred, body, sn, unix_now()).encode();
            match self.transport.exchange(&frame) {
                Ok(reply) => return self.open_reply(&reply, sn),
                Err(e) if attempt > self.config.retries => {
                    return Err(ClientError::Transport {
                        attempts: attempt,
                        source: e,
                    })
                }
                Err(e) => {
                    warn!(attempt, error = %e, "transport error, retrying");
                    self.sleeper.sleep(self.config.retry_delay);
                }
            }
        }
    }

    fn open_reply(&self, reply: &[u8], sn: u64) -> Result<MessageBody, ClientError> {
        let env = Envelope::decode(reply).map_err(|e| ClientError::Protocol(e.to_string()))?;
        let opened = open_response(&env, &self.cred, sn, unix_now(), self.config.delta_t_secs)
            .map_err(|e| ClientError::Protocol(e.to_string()))?;
        match opened.body {
            MessageBody::ProtocolError { code } => Err(ClientError::Protocol(format!("server reported {code}"))),
            body => Ok(body),
        }
    }

    /// Sends the inventory and returns the job token after checking the echo.
    pub fn submit(&mut self, inventory: &Inventory) -> Result<String, ClientError> {
        let reply = self.request(&MessageBody::ScanRequest {
            rsd: inventory.clone(),
        })?;
        match reply {
            MessageBody::ScanAccept {
                ref token,
                ref echo_client_id_a,
            } => {
                if !client_check_echo(&self.cred.client_id, &reply) {
                    return Err(ClientError::Mitm {
                        sent: self.cred.client_id.clone(),
                        echoed: echo_client_id_a.clone(),
                    });
                }
                Ok(token.clone())
            }
            MessageBody::ScanReject { reason } => Err(ClientError::Rejected(reason)),
            other => Err(ClientError::Protocol(format!("unexpected reply {:?}", other.msg_type()))),
        }
    }

    /// Polls every `poll_interval` until the report arrives, the server
    /// refuses, or `max_wait` of waiting has been spent.
    pub fn poll_result(&mut self, token: &str) -> Result<ScanReport, ClientError> {
        let mut waited = Duration::ZERO;
        let mut polls = 0u32;
        loop {
            polls += 1;
            let reply = self.request(&MessageBody::ResultRequest { token: token.into() })?;
            match reply {
                MessageBody::ResultResponse { report } => {
                    debug!(polls, "report received");
                    return Ok(report);
                }
                MessageBody::ResultNotReady {} => {
                    if waited + self.config.poll_interval > self.config.max_wait {
                        return Err(ClientError::Timeout(waited));
                    }
                    self.sleeper.sleep(self.config.poll_interval);
                    waited += self.config.poll_interval;
                }
                MessageBody::ScanReject { reason } if reason == "poll-limit" => {
                    return Err(ClientError::PollLimit)
                }
                MessageBody::ScanReject { reason } => return Err(ClientError::Rejected(reason)),
                other => {
                    return Err(ClientError::Protocol(format!("unexpected reply {:?}", other.msg_type())))
                }
            }
        }
    }

    /// Submit then poll.
    pub fn run_scan(&mut self, inventory: &Inventory) -> Result<(String, ScanReport), ClientError> {
        let token = self.submit(inventory)?;
        let report = self.poll_result(&token)?;
        Ok((token, report))
    }
}
