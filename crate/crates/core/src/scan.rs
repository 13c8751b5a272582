//! Scan execution: per-PVC generation, matching and caching, plus reports.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use crate::cpe::CpeName;
use crate::db::{PvcCacheEntry, Snapshot, VulnDb};
use crate::error::ScanError;
use crate::generation::generate_cpes;
use crate::pvc::{Inventory, Pvc};

#[derive(Debug, Clone, PartialEq)]
pub struct PvcScanResult {
    pub pvc: Pvc,
    pub generated_cpes: BTreeSet<CpeName>,
    pub cve_ids: BTreeSet<String>,
    pub cache_hit: bool,
    pub elapsed: Duration,
    /// Set when this PVC could not be scanned; siblings are unaffected.
    pub error: Option<String>,
}

impl PvcScanResult {
    fn failed(pvc: Pvc, error: String, elapsed: Duration) -> Self {
        PvcScanResult {
            pvc,
            generated_cpes: BTreeSet::new(),
            cve_ids: BTreeSet::new(),
            cache_hit: false,
            elapsed,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CveFinding {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cvss: Option<f64>,
    pub exploit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvcReport {
    pub pvc: Pvc,
    pub cpes: Vec<String>,
    pub cves: Vec<CveFinding>,
    pub cache_hit: bool,
    #[serde(default)]
    pub elapsed_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PvcReport {
    pub fn max_cvss(&self) -> Option<f64> {
        max_score(self.cves.iter().filter_map(|c| c.cvss))
    }

    pub fn has_exploit(&self) -> bool {
        self.cves.iter().any(|c| c.exploit)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportSummary {
    /// Distinct CVE ids across all PVCs.
    pub total_cves: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_cvss: Option<f64>,
    /// Distinct CVEs with a known exploit.
    pub exploit_available: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScanReport {
    pub token: String,
    pub results: Vec<PvcReport>,
    pub summary: ReportSummary,
}

fn max_score(scores: impl Iterator<Item = f64>) -> Option<f64> {
    scores.fold(None, |acc, s| Some(acc.map_or(s, |a: f64| a.max(s))))
}

impl ScanReport {
    pub fn new(token: impl Into<String>, results: Vec<PvcReport>) -> Self {
        let mut report = ScanReport {
            token: token.into(),
            results,
            summary: ReportSummary::default(),
        };
        report.summary = report.compute_summary();
        report
    }

    pub fn compute_summary(&self) -> ReportSummary {
        let mut seen = BTreeSet::new();
        let mut exploited = BTreeSet::new();
        let mut max_cvss = None;
        for finding in self.results.iter().flat_map(|r| &r.cves) {
            seen.insert(finding.id.as_str());
            if finding.exploit {
                exploited.insert(finding.id.as_str());
            }
            if let Some(s) = finding.cvss {
                max_cvss = max_score([s].into_iter().chain(max_cvss));
            }
        }
        ReportSummary {
            total_cves: seen.len(),
            max_cvss,
            exploit_available: exploited.len(),
        }
    }

    /// All distinct CVE ids in the report.
    pub fn cve_ids(&self) -> BTreeSet<String> {
        self.results
            .iter()
            .flat_map(|r| r.cves.iter().map(|c| c.id.clone()))
            .collect()
    }

    /// Copy with the token, timings and cache flags cleared, for comparing
    /// two runs over the same snapshot.
    pub fn comparison_form(&self) -> ScanReport {
        let mut r = self.clone();
        r.token.clear();
        for p in &mut r.results {
            p.elapsed_ms = 0;
            p.cache_hit = false;
        }
        r
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// |found ∩ actual| / |actual| × 100.
pub fn compute_accuracy<T: Ord>(
    found: &BTreeSet<T>,
    actual: &BTreeSet<T>,
) -> Result<f64, ScanError> {
    if actual.is_empty() {
        return Err(ScanError::EmptyGroundTruth);
    }
    let hits = found.intersection(actual).count();
    Ok(hits as f64 / actual.len() as f64 * 100.0)
}

#[derive(Debug, Clone)]
pub struct Scanner {
    db: Arc<VulnDb>,
    pvc_concurrency: usize,
}

impl Scanner {
    pub fn new(db: Arc<VulnDb>, pvc_concurrency: usize) -> Self {
        Scanner {
            db,
            pvc_concurrency: pvc_concurrency.max(1),
        }
    }

    pub fn db(&self) -> &Arc<VulnDb> {
        &self.db
    }

    pub fn pvc_concurrency(&self) -> usize {
        self.pvc_concurrency
    }

    /// Scans one PVC against the current generation.
    pub fn scan_pvc(&self, pvc: &Pvc) -> Result<PvcScanResult, ScanError> {
        let snapshot = self.db.snapshot();
        self.scan_pvc_on(&snapshot, pvc)
    }

    /// Scans one PVC against `snapshot`. A cache hit skips generation and
    /// matching; a miss stores its result for the snapshot's generation.
    pub fn scan_pvc_on(&self, snapshot: &Snapshot, pvc: &Pvc) -> Result<PvcScanResult, ScanError> {
        let started = Instant::now();
        let generation = snapshot.generation();
        if generation == 0 {
            return Err(ScanError::Uninitialized);
        }
        let fingerprint = pvc.fingerprint();
        if let Some(hit) = self
            .db
            .cache_lookup(&fingerprint)
            .filter(|e| e.generation == generation)
        {
            return Ok(PvcScanResult {
                pvc: pvc.clone(),
                generated_cpes: hit.generated_cpes,
                cve_ids: hit.cve_ids,
                cache_hit: true,
                elapsed: started.elapsed(),
                error: None,
            });
        }

        let generated_cpes = match generate_cpes(pvc, snapshot.index()) {
            Ok(c) => c,
            Err(e) => {
                return Ok(PvcScanResult::failed(
                    pvc.clone(),
                    e.to_string(),
                    started.elapsed(),
                ))
            }
        };
        let cve_ids = snapshot.match_cpes_to_cves(&generated_cpes);
        debug!(pvc = %pvc.name, cpes = generated_cpes.len(), cves = cve_ids.len(), "scanned PVC");
        let entry = PvcCacheEntry {
            fingerprint,
            generation,
            cve_ids: cve_ids.clone(),
            generated_cpes: generated_cpes.clone(),
        };
        if let Err(e) = self.db.cache_store(entry) {
            // the database moved on while this job ran on an older snapshot
            debug!(error = %e, "not caching result");
        }
        Ok(PvcScanResult {
            pvc: pvc.clone(),
            generated_cpes,
            cve_ids,
            cache_hit: false,
            elapsed: started.elapsed(),
            error: None,
        })
    }

    /// Scans every PVC of `inventory` on one snapshot, with at most
    /// `pvc_concurrency` PVCs in flight. Results keep inventory order.
    pub fn scan_inventory(&self, inventory: &Inventory) -> Vec<PvcScanResult> {
        let snapshot = self.db.snapshot();
        self.scan_inventory_on(&snapshot, inventory)
    }

    pub fn scan_inventory_on(
        &self,
        snapshot: &Snapshot,
        inventory: &Inventory,
    ) -> Vec<PvcScanResult> {
        let pvcs = &inventory.pvcs;
        let slots: Vec<Mutex<Option<PvcScanResult>>> =
            pvcs.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.pvc_concurrency.min(pvcs.len());

        let run_one = |i: usize| {
            let pvc = &pvcs[i];
            let started = Instant::now();
            let result = catch_unwind(AssertUnwindSafe(|| self.scan_pvc_on(snapshot, pvc)));
            let result = match result {
                Ok(Ok(r)) => r,
                Ok(Err(e)) => PvcScanResult::failed(pvc.clone(), e.to_string(), started.elapsed()),
                Err(_) => {
                    warn!(pvc = %pvc.name, "PVC scan panicked");
                    PvcScanResult::failed(pvc.clone(), "internal error".into(), started.elapsed())
                }
            };
            *slots[i].lock().expect("slot lock poisoned") = Some(result);
        };

        if workers <= 1 {
            (0..pvcs.len()).for_each(run_one);
        } else {
            std::thread::scope(|s| {
                for _ in 0..workers {
                    s.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= pvcs.len() {
                            break;
                        }
                        run_one(i);
                    });
                }
            });
        }

        slots
            .into_iter()
            .map(|m| {
                m.into_inner()
                    .expect("slot lock poisoned")
                    .expect("every slot filled")
            })
            .collect()
    }

    /// Runs a whole job and renders its report.
    pub fn execute_job(&self, token: &str, inventory: &Inventory) -> ScanReport {
        let snapshot = self.db.snapshot();
        let results = self.scan_inventory_on(&snapshot, inventory);
        build_report(token, &snapshot, &results)
    }
}

/// Resolves CVE details from `snapshot` for each per-PVC result.
pub fn build_report(token: &str, snapshot: &Snapshot, results: &[PvcScanResult]) -> ScanReport {
    let rows = results
        .iter()
        .map(|r| PvcReport {
            pvc: r.pvc.clone(),
            cpes: r.generated_cpes.iter().map(CpeName::to_uri).collect(),
            cves: r
                .cve_ids
                .iter()
                .map(|id| {
                    let record = snapshot.cve(id);
                    CveFinding {
                        id: id.clone(),
                        cvss: record.and_then(|c| c.max_cvss()),
                        exploit: record.is_some_and(|c| c.exploit_available),
                    }
                })
                .collect(),
            cache_hit: r.cache_hit,
            elapsed_ms: r.elapsed.as_millis() as u64,
            error: r.error.clone(),
        })
        .collect();
    ScanReport::new(token, rows)
}
