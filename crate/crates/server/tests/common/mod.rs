#![allow(dead_code)]

use std::net::IpAddr;
use std::sync::Arc;
use std::time::SystemTime;

use pvcscan_core::{CpeName, CveRecord, Inventory, Pvc, VulnDb};
use pvcscan_protocol::{
    open_response, seal_message, unix_now, ClientCredential, Envelope, MessageBody,
};
use pvcscan_server::{FirewallRule, Response, Server, ServerConfig};

pub const SECRET: &str = "correct horse battery staple";
pub const SALT_HEX: &str = "000102030405060708090a0b0c0d0e0f";

pub fn credential(id: &str) -> ClientCredential {
    ClientCredential::from_hex_salt(id, SECRET.as_bytes(), SALT_HEX).unwrap()
}

pub fn localhost() -> IpAddr {
    "127.0.0.1".parse().unwrap()
}

pub fn config() -> ServerConfig {
    ServerConfig {
        workers: 1,
        pvc_concurrency: 2,
        firewall: vec![FirewallRule::allow_all()],
        ..ServerConfig::default()
    }
}

/// A small database: Acme Paint 1.0 and Windows XP are vulnerable.
pub fn fixture_db() -> Arc<VulnDb> {
    let db = VulnDb::in_memory();
    let mut tx = db.begin_update();
    tx.ingest_cpe_dictionary_str("cpe:/a:acme:paint:1.0\ncpe:/o:microsoft:windows_xp\n");
    let mut r = CveRecord::new("CVE-2021-0001");
    r.applicability
        .insert(CpeName::parse("cpe:/a:acme:paint:1.0").unwrap());
    tx.upsert_cve(r);
    let mut r = CveRecord::new("CVE-2021-0002");
    r.applicability
        .insert(CpeName::parse("cpe:/o:microsoft:windows_xp").unwrap());
    tx.upsert_cve(r);
    tx.commit().unwrap();
    Arc::new(db)
}

pub fn server_with(config: ServerConfig, ids: &[&str]) -> Arc<Server> {
    let creds = ids.iter().map(|id| credential(id)).collect();
    Server::new(config, creds, fixture_db())
}

pub fn inventory() -> Inventory {
    let mut paint = Pvc::app("Acme Paint");
    paint.version = Some("1.0".into());
    Inventory {
        target_label: "desk".into(),
        pvcs: vec![paint, Pvc::os("Windows XP")],
    }
}

/// A client-side view: credential plus its own sequence counter.
pub struct Peer {
    pub cred: ClientCredential,
    pub sn: u64,
}

impl Peer {
    pub fn new(id: &str) -> Self {
        Peer {
            cred: credential(id),
            sn: 1,
        }
    }

    pub fn frame(&mut self, body: &MessageBody) -> Vec<u8> {
        self.sn += 1;
        seal_message(&self.cred, body, self.sn, unix_now()).encode()
    }

    pub fn open(&self, response: &Response) -> MessageBody {
        let env = Envelope::decode(&response.frame).unwrap();
        open_response(&env, &self.cred, self.sn, unix_now(), 60)
            .unwrap()
            .body
    }

    /// Sends `body` through `handle_frame` and opens the reply.
    pub fn send(&mut self, server: &Server, body: &MessageBody) -> MessageBody {
        self.send_at(server, body, SystemTime::now())
    }

    pub fn send_at(&mut self, server: &Server, body: &MessageBody, now: SystemTime) -> MessageBody {
        let frame = self.frame(body);
        let resp = server
            .handle_frame_at(&frame, localhost(), now)
            .expect("server replied");
        self.open(&resp)
    }

    pub fn submit(&mut self, server: &Server) -> String {
        match self.send(server, &MessageBody::ScanRequest { rsd: inventory() }) {
            MessageBody::ScanAccept { token, .. } => token,
            other => panic!("expected accept, got {other:?}"),
        }
    }
}
