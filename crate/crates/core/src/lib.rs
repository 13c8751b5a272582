//! Inventory-driven vulnerability scanning.
//!
//! A client reports its possibly-vulnerable components (PVCs). For each PVC
//! the scanner derives candidate CPE 2.2 names from naming conventions,
//! matches them against CVE applicability data ingested from NVD feeds, and
//! caches the outcome per PVC until the next database update.

pub mod cpe;
pub mod db;
pub mod error;
pub mod generation;
pub mod pvc;
pub mod scan;

pub use cpe::{cpe_matches, format_cpe_uri, parse_cpe_uri, Component, CpeName, Part};
pub use db::{CveRecord, DbGeneration, PvcCacheEntry, Snapshot, UpdateTransaction, VulnDb};
pub use error::{CpeError, DbError, GenerationError, InventoryError, ScanError};
pub use generation::{generate_cpes, GenerationIndex};
pub use pvc::{fingerprint_pvc, load_inventory, Fingerprint, Inventory, Pvc, PvcKind};
pub use scan::{compute_accuracy, PvcScanResult, ScanReport, Scanner};
