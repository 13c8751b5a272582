use pvcscan_core::{Inventory, ScanReport};
use serde::{Deserialize, Serialize};

use crate::frame::MsgType;

/// The sealed message bodies. The wire `msg_type` is derived from the variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MessageBody {
    ScanRequest { rsd: Inventory },
    ScanAccept { token: String, echo_client_id_a: String },
    ScanReject { reason: String },
    ResultRequest { token: String },
    ResultNotReady {},
    ResultResponse { report: ScanReport },
    ProtocolError { code: String },
}

impl MessageBody {
    pub fn msg_type(&self) -> MsgType {
        match self {
            MessageBody::ScanRequest { .. } => MsgType::ScanRequest,
            MessageBody::ScanAccept { .. } => MsgType::ScanAccept,
            MessageBody::ScanReject { .. } => MsgType::ScanReject,
            MessageBody::ResultRequest { .. } => MsgType::ResultRequest,
            MessageBody::ResultNotReady {} => MsgType::ResultNotReady,
            MessageBody::ResultResponse { .. } => MsgType::ResultResponse,
            MessageBody::ProtocolError { .. } => MsgType::ProtocolError,
        }
    }

    pub fn reject(reason: impl Into<String>) -> Self {
        MessageBody::ScanReject {
            reason: reason.into(),
        }
    }
}

/// Plaintext inside the AES-GCM seal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub id_b: String,
    pub sn: u64,
    pub ts: i64,
    pub body: MessageBody,
}

/// MITM check on the client: the server must echo the id it saw in the
/// cleartext header.
pub fn client_check_echo(sent_id: &str, accept: &MessageBody) -> bool {
    matches!(accept, MessageBody::ScanAccept { echo_client_id_a, .. } if echo_client_id_a == sent_id)
}
