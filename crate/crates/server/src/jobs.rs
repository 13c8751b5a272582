//! Scan jobs: the FIFO queue, the token-keyed store and the worker pool.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::SystemTime;

use pvcscan_core::{Inventory, ScanReport, Scanner};
use rand::RngCore;
use tracing::{debug, info, warn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone)]
pub struct ScanJob {
    pub token: String,
    pub client_id: String,
    pub inventory: Arc<Inventory>,
    pub state: JobState,
    pub enqueued_at: SystemTime,
    pub polls_used: u32,
    /// Position in completion order, set when the job leaves `Running`.
    pub finished_seq: Option<u64>,
    pub report: Option<Arc<ScanReport>>,
    pub failure: Option<String>,
}

/// 128 random bits, hex encoded.
pub fn new_token() -> String {
    let mut b = [0u8; 16];
    rand::thread_rng().fill_bytes(&mut b);
    hex::encode(b)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FetchOutcome {
    Report(Arc<ScanReport>),
    NotReady,
    /// `violation` marks rejects that count against the client.
    Reject { reason: String, violation: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnqueueError {
    Busy,
}

struct Queue {
    items: Mutex<VecDeque<String>>,
    ready: Condvar,
    capacity: usize,
}

/// Queue, store and worker pool.
pub struct JobManager {
    queue: Queue,
    jobs: RwLock<HashMap<String, Mutex<ScanJob>>>,
    finished: AtomicU64,
    shutdown: AtomicBool,
    workers: Mutex<Vec<JoinHandle<()>>>,
}

impl JobManager {
    pub fn new(queue_capacity: usize) -> Arc<Self> {
        Arc::new(JobManager {
            queue: Queue {
                items: Mutex::new(VecDeque::new()),
                ready: Condvar::new(),
                capacity: queue_capacity.max(1),
            },
            jobs: RwLock::new(HashMap::new()),
            finished: AtomicU64::new(0),
            shutdown: AtomicBool::new(false),
            workers: Mutex::new(Vec::new()),
        })
    }

    /// Stores a new queued job and returns its token.
    pub fn enqueue_job(&self, inventory: Inventory, client_id: &str) -> Result<String, EnqueueError> {
        let mut items = self.queue.items.lock().unwrap();
        if items.len() >= self.queue.capacity {
            return Err(EnqueueError::Busy);
        }
        let mut jobs = self.jobs.write().unwrap();
        let mut token = new_token();
        while jobs.contains_key(&token) {
            token = new_token();
        }
        jobs.insert(
            token.clone(),
            Mutex::new(ScanJob {
                token: token.clone(),
                client_id: client_id.to_string(),
                inventory: Arc::new(inventory),
                state: JobState::Queued,
                enqueued_at: SystemTime::now(),
                polls_used: 0,
                finished_seq: None,
                report: None,
                failure: None,
            }),
        );
        drop(jobs);
        items.push_back(token.clone());
        drop(items);
        self.queue.ready.notify_one();
        Ok(token)
    }

    pub fn queue_len(&self) -> usize {
        self.queue.items.lock().unwrap().len()
    }

    pub fn job(&self, token: &str) -> Option<ScanJob> {
        self.jobs.read().unwrap().get(token).map(|j| j.lock().unwrap().clone())
    }

    pub fn job_count(&self) -> usize {
        self.jobs.read().unwrap().len()
    }

    /// Counts the poll and answers it. Tokens are bound to the issuing client.
    pub fn fetch_result(&self, token: &str, client_id: &str, max_polls: u32) -> FetchOutcome {
        let jobs = self.jobs.read().unwrap();
        let Some(job) = jobs.get(token) else {
            return FetchOutcome::Reject {
                reason: "unknown-token".into(),
                violation: false,
            };
        };
        let mut job = job.lock().unwrap();
        if job.client_id != client_id {
            warn!(token, owner = %job.client_id, client_id, "poll for another client's token");
            return FetchOutcome::Reject {
                reason: "unknown-token".into(),
                violation: true,
            };
        }
        job.polls_used = job.polls_used.saturating_add(1);
        if job.polls_used > max_polls {
            return FetchOutcome::Reject {
                reason: "poll-limit".into(),
                violation: true,
            };
        }
        match job.state {
            JobState::Queued | JobState::Running => FetchOutcome::NotReady,
            JobState::Done => FetchOutcome::Report(job.report.clone().expect("done job has a report")),
            JobState::Failed => FetchOutcome::Reject {
                reason: format!("failed: {}", job.failure.as_deref().unwrap_or("unknown")),
                violation: false,
            },
        }
    }

    /// Blocks for the next token; `None` once shut down.
    fn next(&self) -> Option<String> {
        let mut items = self.queue.items.lock().unwrap();
        loop {
            if self.shutdown.load(Ordering::SeqCst) {
                return None;
            }
            if let Some(t) = items.pop_front() {
                return Some(t);
            }
            items = self.queue.ready.wait(items).unwrap();
        }
    }

    fn set_state(&self, token: &str, f: impl FnOnce(&mut ScanJob)) {
        if let Some(job) = self.jobs.read().unwrap().get(token) {
            f(&mut job.lock().unwrap());
        }
    }

    /// Runs one job to completion on the calling thread.
    pub fn run_job(&self, token: &str, scanner: &Scanner) {
        let Some(job) = self.job(token) else { return };
        self.set_state(token, |j| j.state = JobState::Running);
        if let Err(e) = scanner.db().reload_if_newer() {
            warn!(error = %e, "could not reload database");
        }
        let outcome = if scanner.db().is_initialized() {
            let inv = job.inventory.clone();
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| scanner.execute_job(token, &inv)))
                .map_err(|_| "scan panicked".to_string())
        } else {
            Err("database not initialized".to_string())
        };
        let seq = self.finished.fetch_add(1, Ordering::SeqCst);
        self.set_state(token, |j| {
            j.finished_seq = Some(seq);
            match outcome {
                Ok(report) => {
                    j.state = JobState::Done;
                    j.report = Some(Arc::new(report));
                }
                Err(reason) => {
                    j.state = JobState::Failed;
                    j.failure = Some(reason);
                }
            }
        });
        debug!(token, seq, "job finished");
    }

    /// Starts `count` worker threads consuming the queue.
    pub fn start_workers(self: &Arc<Self>, count: usize, scanner: Arc<Scanner>) {
        let mut workers = self.workers.lock().unwrap();
        for i in 0..count.max(1) {
            let me = Arc::clone(self);
            let scanner = Arc::clone(&scanner);
            let handle = std::thread::Builder::new()
                .name(format!("scan-worker-{i}"))
                .spawn(move || {
                    while let Some(token) = me.next() {
                        me.run_job(&token, &scanner);
                    }
                })
                .expect("spawn worker");
            workers.push(handle);
        }
        info!(count, "workers started");
    }

    /// Stops the workers after their current job. Queued jobs stay queued.
    pub fn shutdown(&self) {
        self.shutdown.store(true, Ordering::SeqCst);
        self.queue.ready.notify_all();
        let handles: Vec<_> = self.workers.lock().unwrap().drain(..).collect();
        for h in handles {
            let _ = h.join();
        }
    }
}
