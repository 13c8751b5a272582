//! Vulnerability database: CVE records, the CPE dictionary and exploit links,
//! versioned by a generation counter, plus the per-PVC result cache.
//!
//! Readers take an immutable [`Snapshot`]. Updates go through an
//! [`UpdateTransaction`] that stages changes on a copy and, on commit,
//! persists the new state and swaps it in with the generation bumped by one.
//! Dropping a transaction without committing discards it.

mod feed;
mod matching;
mod sources;
mod store;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

pub use feed::{cpe23_to_name, is_cve_id, parse_feed, CveRecord, CvssScore, FeedStats};
pub use matching::MatchIndex;
pub use sources::{parse_dictionary, parse_exploit_map, ExploitLink};

use crate::cpe::CpeName;
use crate::error::DbError;
use crate::generation::GenerationIndex;
use crate::pvc::Fingerprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DbGeneration {
    pub counter: u64,
    /// Unix seconds of the update that produced this generation.
    pub updated_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvcCacheEntry {
    pub fingerprint: Fingerprint,
    pub generation: u64,
    pub cve_ids: BTreeSet<String>,
    pub generated_cpes: BTreeSet<CpeName>,
}

/// Everything that is versioned by the generation counter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DbContents {
    pub generation: DbGeneration,
    pub cves: BTreeMap<String, CveRecord>,
    pub dictionary: BTreeSet<CpeName>,
    pub exploit_links: BTreeSet<ExploitLink>,
}

/// Immutable view of one generation with its derived indexes.
#[derive(Debug)]
pub struct Snapshot {
    contents: DbContents,
    index: GenerationIndex,
    matcher: MatchIndex,
}

impl Snapshot {
    fn build(contents: DbContents) -> Self {
        let index = GenerationIndex::from_names(&contents.dictionary);
        let matcher = MatchIndex::build(contents.cves.values());
        Snapshot {
            contents,
            index,
            matcher,
        }
    }

    pub fn generation(&self) -> u64 {
        self.contents.generation.counter
    }

    pub fn db_generation(&self) -> DbGeneration {
        self.contents.generation
    }

    pub fn index(&self) -> &GenerationIndex {
        &self.index
    }

    pub fn cve(&self, id: &str) -> Option<&CveRecord> {
        self.contents.cves.get(id)
    }

    pub fn cves(&self) -> impl Iterator<Item = &CveRecord> {
        self.contents.cves.values()
    }

    pub fn cve_count(&self) -> usize {
        self.contents.cves.len()
    }

    pub fn dictionary(&self) -> &BTreeSet<CpeName> {
        &self.contents.dictionary
    }

    pub fn exploit_links(&self) -> &BTreeSet<ExploitLink> {
        &self.contents.exploit_links
    }

    pub fn contents(&self) -> &DbContents {
        &self.contents
    }

    /// Ids of every CVE with an applicability name matching one of `cpes`.
    pub fn match_cpes_to_cves<'a>(
        &self,
        cpes: impl IntoIterator<Item = &'a CpeName>,
    ) -> BTreeSet<String> {
        self.matcher.match_cpes(cpes)
    }
}

pub struct VulnDb {
    current: RwLock<Arc<Snapshot>>,
    cache: RwLock<HashMap<Fingerprint, PvcCacheEntry>>,
    update_lock: Mutex<()>,
    path: Option<PathBuf>,
}

impl std::fmt::Debug for VulnDb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VulnDb")
            .field("generation", &self.generation())
            .field("path", &self.path)
            .finish()
    }
}

impl Default for VulnDb {
    fn default() -> Self {
        VulnDb::in_memory()
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default()
}

impl VulnDb {
    /// An empty, uninitialized (generation 0) database that is never persisted.
    pub fn in_memory() -> Self {
        VulnDb {
            current: RwLock::new(Arc::new(Snapshot::build(DbContents::default()))),
            cache: RwLock::new(HashMap::new()),
            update_lock: Mutex::new(()),
            path: None,
        }
    }

    /// Opens the single-file store at `path`, starting empty if it does not
    /// exist yet. Cache entries from older generations are dropped on load.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, DbError> {
        let path = path.as_ref().to_path_buf();
        let (contents, cache) = match store::load(&path)? {
            Some(stored) => stored,
            None => (DbContents::default(), Vec::new()),
        };
        let generation = contents.generation.counter;
        let cache = cache
            .into_iter()
            .filter(|e| e.generation == generation)
            .map(|e| (e.fingerprint, e))
            .collect();
        Ok(VulnDb {
            current: RwLock::new(Arc::new(Snapshot::build(contents))),
            cache: RwLock::new(cache),
            update_lock: Mutex::new(()),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock poisoned").clone()
    }

    pub fn generation(&self) -> u64 {
        self.snapshot().generation()
    }

    pub fn is_initialized(&self) -> bool {
        self.generation() >= 1
    }

    /// Starts an exclusive update. Concurrent readers keep using the current
    /// snapshot until commit.
    pub fn begin_update(&self) -> UpdateTransaction<'_> {
        let guard = self.update_lock.lock().expect("update lock poisoned");
        let staged = self.snapshot().contents.clone();
        UpdateTransaction {
            db: self,
            _guard: guard,
            staged,
        }
    }

    /// Bumps the generation without changing any data, invalidating the cache.
    pub fn bump_generation(&self) -> Result<u64, DbError> {
        self.begin_update().commit()
    }

    /// Matches against the current snapshot.
    pub fn match_cpes_to_cves<'a>(
        &self,
        cpes: impl IntoIterator<Item = &'a CpeName>,
    ) -> BTreeSet<String> {
        self.snapshot().match_cpes_to_cves(cpes)
    }

    /// The entry for `fp`, if it was stored under the current generation.
    pub fn cache_lookup(&self, fp: &Fingerprint) -> Option<PvcCacheEntry> {
        let generation = self.generation();
        self.cache
            .read()
            .expect("cache lock poisoned")
            .get(fp)
            .filter(|e| e.generation == generation)
            .cloned()
    }

    pub fn cache_store(&self, entry: PvcCacheEntry) -> Result<(), DbError> {
        // Hold the snapshot read lock so a commit cannot slip in between the
        // generation check and the insert.
        let current = self.current.read().expect("snapshot lock poisoned");
        let generation = current.generation();
        if entry.generation != generation {
            return Err(DbError::GenerationMismatch {
                entry: entry.generation,
                current: generation,
            });
        }
        self.cache
            .write()
            .expect("cache lock poisoned")
            .insert(entry.fingerprint, entry);
        Ok(())
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().expect("cache lock poisoned").len()
    }

    /// Writes the current contents and cache to the backing file, if any.
    pub fn flush(&self) -> Result<(), DbError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let _guard = self.update_lock.lock().expect("update lock poisoned");
        let snapshot = self.snapshot();
        if let Some(on_disk) = store::peek_generation(path)? {
            if on_disk > snapshot.generation() {
                warn!(
                    on_disk,
                    in_memory = snapshot.generation(),
                    "store has a newer generation; not overwriting it"
                );
                return Ok(());
            }
        }
        let cache: Vec<PvcCacheEntry> = self
            .cache
            .read()
            .expect("cache lock poisoned")
            .values()
            .cloned()
            .collect();
        store::save(path, &snapshot.contents, &cache)
    }

    /// Reloads from the backing file when another process committed a newer
    /// generation. Returns the generation now in effect.
    pub fn reload_if_newer(&self) -> Result<u64, DbError> {
        let Some(path) = &self.path else {
            return Ok(self.generation());
        };
        let current = self.generation();
        match store::peek_generation(path)? {
            Some(g) if g > current => {}
            _ => return Ok(current),
        }
        let _guard = self.update_lock.lock().expect("update lock poisoned");
        let Some((contents, cache)) = store::load(path)? else {
            return Ok(current);
        };
        let generation = contents.generation.counter;
        self.install(Snapshot::build(contents));
        let mut live = self.cache.write().expect("cache lock poisoned");
        live.extend(
            cache
                .into_iter()
                .filter(|e| e.generation == generation)
                .map(|e| (e.fingerprint, e)),
        );
        info!(generation, "reloaded vulnerability database");
        Ok(generation)
    }

    fn install(&self, snapshot: Snapshot) {
        let generation = snapshot.generation();
        *self.current.write().expect("snapshot lock poisoned") = Arc::new(snapshot);
        self.cache
            .write()
            .expect("cache lock poisoned")
            .retain(|_, e| e.generation == generation);
    }
}

/// Staged changes for one update. See the module docs.
pub struct UpdateTransaction<'a> {
    db: &'a VulnDb,
    _guard: MutexGuard<'a, ()>,
    staged: DbContents,
}

impl UpdateTransaction<'_> {
    fn read(path: &Path) -> Result<String, DbError> {
        std::fs::read_to_string(path).map_err(|e| DbError::io(path, e))
    }

    /// Upserts every CVE in an NVD feed file.
    pub fn ingest_nvd_feed(&mut self, path: impl AsRef<Path>) -> Result<FeedStats, DbError> {
        let path = path.as_ref();
        let text = Self::read(path)?;
        self.ingest_nvd_feed_str(&text).map_err(|message| DbError::Feed {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn ingest_nvd_feed_str(&mut self, text: &str) -> Result<FeedStats, String> {
        let (records, skipped) = parse_feed(text)?;
        let upserted = records.len();
        for r in records {
            self.staged.cves.insert(r.id.clone(), r);
        }
        Ok(FeedStats { upserted, skipped })
    }

    /// Adds dictionary names. Returns the number of names read.
    pub fn ingest_cpe_dictionary(&mut self, path: impl AsRef<Path>) -> Result<usize, DbError> {
        let text = Self::read(path.as_ref())?;
        Ok(self.ingest_cpe_dictionary_str(&text))
    }

    pub fn ingest_cpe_dictionary_str(&mut self, text: &str) -> usize {
        let (names, _skipped) = parse_dictionary(text);
        let n = names.len();
        self.staged.dictionary.extend(names);
        n
    }

    /// Adds exploit links. Links to CVEs not (yet) present are kept.
    pub fn ingest_exploit_map(&mut self, path: impl AsRef<Path>) -> Result<usize, DbError> {
        let path = path.as_ref();
        let text = Self::read(path)?;
        self.ingest_exploit_map_str(&text)
            .map_err(|e| DbError::ExploitMap {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
    }

    pub fn ingest_exploit_map_str(&mut self, text: &str) -> Result<usize, csv::Error> {
        let (links, _skipped) = parse_exploit_map(text)?;
        let n = links.len();
        self.staged.exploit_links.extend(links);
        Ok(n)
    }

    /// Direct access for callers that build records themselves.
    pub fn upsert_cve(&mut self, record: CveRecord) {
        self.staged.cves.insert(record.id.clone(), record);
    }

    pub fn staged(&self) -> &DbContents {
        &self.staged
    }

    /// Bumps the generation, persists, and publishes the new snapshot.
    pub fn commit(mut self) -> Result<u64, DbError> {
        let exploited: BTreeSet<&str> = self
            .staged
            .exploit_links
            .iter()
            .map(|l| l.cve_id.as_str())
            .collect();
        for (id, record) in self.staged.cves.iter_mut() {
            record.exploit_available = exploited.contains(id.as_str());
        }
        let generation = self.staged.generation.counter + 1;
        self.staged.generation = DbGeneration {
            counter: generation,
            updated_at: unix_now(),
        };
        if let Some(path) = &self.db.path {
            store::save(path, &self.staged, &[])?;
        }
        self.db.install(Snapshot::build(self.staged));
        info!(generation, "committed vulnerability database update");
        Ok(generation)
    }
}
