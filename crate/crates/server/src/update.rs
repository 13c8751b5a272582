//! Feed update: every source in a directory goes into one transaction.

use std::path::{Path, PathBuf};

use pvcscan_core::{DbError, VulnDb};
use tracing::info;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UpdateSummary {
    pub generation: u64,
    pub cves_upserted: usize,
    pub cves_skipped: usize,
    pub dictionary_entries: usize,
    pub exploit_links: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum UpdateError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("no feed, dictionary or exploit files in {}", .0.display())]
    NoSources(PathBuf),
    #[error(transparent)]
    Db(#[from] DbError),
}

/// Ingests `*.json` NVD feeds, `*.txt`/`*.xml` CPE dictionaries and `*.csv`
/// exploit maps from `feeds_dir`. Any failure aborts the whole update and
/// leaves the database untouched.
pub fn run_update(db: &VulnDb, feeds_dir: &Path) -> Result<UpdateSummary, UpdateError> {
    let io = |source| UpdateError::Io {
        path: feeds_dir.to_path_buf(),
        source,
    };
    let mut files: Vec<PathBuf> = std::fs::read_dir(feeds_dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    files.sort();
    let ext = |p: &PathBuf| p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);

    let mut summary = UpdateSummary::default();
    let mut seen = false;
    let mut tx = db.begin_update();
    for path in files.iter().filter(|p| ext(p).as_deref() == Some("json")) {
        let stats = tx.ingest_nvd_feed(path)?;
        summary.cves_upserted += stats.upserted;
        summary.cves_skipped += stats.skipped;
        seen = true;
    }
    for path in files
        .iter()
        .filter(|p| matches!(ext(p).as_deref(), Some("txt" | "xml")))
    {
        summary.dictionary_entries += tx.ingest_cpe_dictionary(path)?;
        seen = true;
    }
    for path in files.iter().filter(|p| ext(p).as_deref() == Some("csv")) {
        summary.exploit_links += tx.ingest_exploit_map(path)?;
        seen = true;
    }
    if !seen {
        return Err(UpdateError::NoSources(feeds_dir.to_path_buf()));
    }
    summary.generation = tx.commit()?;
    info!(?summary, "update committed");
    Ok(summary)
}
