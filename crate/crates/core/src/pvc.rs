//! Possibly-vulnerable components (PVCs) and client inventories.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use tracing::warn;

use crate::error::InventoryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PvcKind {
    #[serde(rename = "os")]
    OperatingSystem,
    #[serde(rename = "app")]
    Application,
    #[serde(rename = "hw")]
    Hardware,
}

impl PvcKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PvcKind::OperatingSystem => "os",
            PvcKind::Application => "app",
            PvcKind::Hardware => "hw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "os" => Some(PvcKind::OperatingSystem),
            "app" => Some(PvcKind::Application),
            "hw" => Some(PvcKind::Hardware),
            _ => None,
        }
    }
}

/// One possibly-vulnerable component. Only `name` is required.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pvc {
    pub kind: PvcKind,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vendor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub update: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publisher: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_pack: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub major: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minor: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub build: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<u64>,
}

impl Pvc {
    pub fn new(kind: PvcKind, name: impl Into<String>) -> Self {
        Pvc {
            kind,
            name: name.into(),
            vendor: None,
            version: None,
            edition: None,
            update: None,
            language: None,
            publisher: None,
            display_version: None,
            service_pack: None,
            major: None,
            minor: None,
            build: None,
            revision: None,
        }
    }

    pub fn os(name: impl Into<String>) -> Self {
        Pvc::new(PvcKind::OperatingSystem, name)
    }

    pub fn app(name: impl Into<String>) -> Self {
        Pvc::new(PvcKind::Application, name)
    }

    pub fn hardware(name: impl Into<String>) -> Self {
        Pvc::new(PvcKind::Hardware, name)
    }

    /// Digest of the canonical serialization, used as the result-cache key.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_bytes());
        Fingerprint(hasher.finalize().into())
    }

    /// Fixed field order, lowercase keys, normalized values and a sentinel
    /// byte for absent fields. Present values are length-prefixed so no two
    /// field assignments share an encoding.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        fn text(out: &mut Vec<u8>, key: &str, value: Option<&str>) {
            out.extend_from_slice(key.as_bytes());
            match value {
                None => out.push(0),
                Some(v) => {
                    let v = canonical_text(v);
                    out.push(1);
                    out.extend_from_slice(&(v.len() as u64).to_be_bytes());
                    out.extend_from_slice(v.as_bytes());
                }
            }
        }
        fn number(out: &mut Vec<u8>, key: &str, value: Option<u64>) {
            out.extend_from_slice(key.as_bytes());
            match value {
                None => out.push(0),
                Some(n) => {
                    out.push(1);
                    out.extend_from_slice(&n.to_be_bytes());
                }
            }
        }

        let mut out = Vec::with_capacity(128);
        text(&mut out, "kind", Some(self.kind.as_str()));
        text(&mut out, "name", Some(&self.name));
        text(&mut out, "vendor", self.vendor.as_deref());
        text(&mut out, "version", self.version.as_deref());
        text(&mut out, "edition", self.edition.as_deref());
        text(&mut out, "update", self.update.as_deref());
        text(&mut out, "language", self.language.as_deref());
        text(&mut out, "publisher", self.publisher.as_deref());
        text(&mut out, "display_version", self.display_version.as_deref());
        text(&mut out, "service_pack", self.service_pack.as_deref());
        number(&mut out, "major", self.major);
        number(&mut out, "minor", self.minor);
        number(&mut out, "build", self.build);
        number(&mut out, "revision", self.revision);
        out
    }
}

/// Lowercase with whitespace runs folded to one space. Candidate generation
/// is invariant under this, so it is safe to key the cache on it.
fn canonical_text(v: &str) -> String {
    v.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// 256-bit PVC digest.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        Some(Fingerprint(bytes.try_into().ok()?))
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({})", self.to_hex())
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Fingerprint::from_hex(&s).ok_or_else(|| serde::de::Error::custom("bad fingerprint"))
    }
}

pub fn fingerprint_pvc(pvc: &Pvc) -> Fingerprint {
    pvc.fingerprint()
}

/// The set of PVCs reported by one target.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Inventory {
    #[serde(default)]
    pub target_label: String,
    #[serde(default)]
    pub pvcs: Vec<Pvc>,
}

const TEXT_FIELDS: [&str; 8] = [
    "vendor",
    "version",
    "edition",
    "update",
    "language",
    "publisher",
    "display_version",
    "service_pack",
];
const NUMBER_FIELDS: [&str; 4] = ["major", "minor", "build", "revision"];

impl Inventory {
    /// Parses the inventory JSON format. Unknown fields are ignored with a
    /// warning; record order is preserved.
    pub fn from_json(text: &str) -> Result<Self, InventoryError> {
        let doc: Value = serde_json::from_str(text)?;
        let obj = doc.as_object().ok_or_else(|| InventoryError::BadRecord {
            index: 0,
            message: "top level must be an object".into(),
        })?;
        for key in obj.keys() {
            if key != "target_label" && key != "pvcs" {
                warn!(field = %key, "ignoring unknown inventory field");
            }
        }
        let target_label = obj
            .get("target_label")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        let records = match obj.get("pvcs") {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(items)) => items.clone(),
            Some(_) => {
                return Err(InventoryError::BadRecord {
                    index: 0,
                    message: "`pvcs` must be an array".into(),
                })
            }
        };
        let pvcs = records
            .iter()
            .enumerate()
            .map(|(i, r)| pvc_from_record(i, r))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Inventory { target_label, pvcs })
    }

    pub fn len(&self) -> usize {
        self.pvcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pvcs.is_empty()
    }
}

fn pvc_from_record(index: usize, record: &Value) -> Result<Pvc, InventoryError> {
    let bad = |message: String| InventoryError::BadRecord { index, message };
    let map: &Map<String, Value> = record
        .as_object()
        .ok_or_else(|| bad("record must be an object".into()))?;

    let name = match map.get("name").and_then(Value::as_str) {
        Some(n) if !n.trim().is_empty() => n.to_string(),
        _ => return Err(InventoryError::MissingName { index }),
    };
    let kind = match map.get("kind") {
        None => PvcKind::Application,
        Some(Value::String(k)) => PvcKind::parse(k).ok_or_else(|| InventoryError::UnknownKind {
            index,
            kind: k.clone(),
        })?,
        Some(other) => {
            return Err(InventoryError::UnknownKind {
                index,
                kind: other.to_string(),
            })
        }
    };

    let mut pvc = Pvc::new(kind, name);
    for (key, value) in map {
        match key.as_str() {
            "kind" | "name" => {}
            k if TEXT_FIELDS.contains(&k) => {
                let v = match value {
                    Value::Null => None,
                    Value::String(s) => Some(s.clone()),
                    Value::Number(n) => Some(n.to_string()),
                    _ => return Err(bad(format!("field `{k}` must be a string"))),
                };
                let slot = match k {
                    "vendor" => &mut pvc.vendor,
                    "version" => &mut pvc.version,
                    "edition" => &mut pvc.edition,
                    "update" => &mut pvc.update,
                    "language" => &mut pvc.language,
                    "publisher" => &mut pvc.publisher,
                    "display_version" => &mut pvc.display_version,
                    _ => &mut pvc.service_pack,
                };
                *slot = v.filter(|s| !s.trim().is_empty());
            }
            k if NUMBER_FIELDS.contains(&k) => {
                let v = match value {
                    Value::Null => None,
                    Value::Number(n) => Some(n.as_u64().ok_or_else(|| {
                        bad(format!("field `{k}` must be a non-negative integer"))
                    })?),
                    _ => return Err(bad(format!("field `{k}` must be a non-negative integer"))),
                };
                let slot = match k {
                    "major" => &mut pvc.major,
                    "minor" => &mut pvc.minor,
                    "build" => &mut pvc.build,
                    _ => &mut pvc.revision,
                };
                *slot = v;
            }
            other => warn!(record = index, field = %other, "ignoring unknown PVC field"),
        }
    }
    Ok(pvc)
}

pub fn load_inventory(path: impl AsRef<Path>) -> Result<Inventory, InventoryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| InventoryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Inventory::from_json(&text)
}
