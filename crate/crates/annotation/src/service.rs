use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use crsq_core::dataset::{dataset_to_string, QuestionRecord};
use serde::{Deserialize, Serialize};

use crate::clock::{Clock, SystemClock};
use crate::model::*;
use crate::state::State;
use crate::ServiceError;

pub const LOG_FORMAT: &str = "crsq-annotation-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceConfig {
    pub lease: Duration,
    /// Create VALIDATE and PARAPHRASE tasks as soon as a sentence is
    /// ready for them. When off they come from explicit batches.
    pub auto_advance: bool,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            lease: Duration::from_secs(600),
            auto_advance: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct LogHeader {
    format: String,
    version: u32,
    auto_advance: bool,
}

/// One line of the event log. Only inputs are logged; everything else is
/// derived from them on replay. Leases are not logged, so a restart
/// re-opens leased tasks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    WorkerRegistered {
        name: String,
    },
    BatchCreated {
        step: Step,
        input: BatchInput,
    },
    ResponseSubmitted {
        worker_id: WorkerId,
        task_id: TaskId,
        body: ResponseBody,
        at: u64,
    },
    ExpertResolved {
        item_id: ExpertItemId,
        approve: bool,
    },
}

fn apply(state: &mut State, event: &LogEvent) -> Result<(), ServiceError> {
    match event {
        LogEvent::WorkerRegistered { name } => state.register(name).map(drop),
        LogEvent::BatchCreated { step, input } => state.create_batch(*step, input).map(drop),
        LogEvent::ResponseSubmitted {
            worker_id,
            task_id,
            body,
            at,
        } => state.submit(*worker_id, *task_id, body.clone(), *at, None).map(drop),
        LogEvent::ExpertResolved { item_id, approve } => state.resolve_expert(*item_id, *approve).map(drop),
    }
}

struct EventLog {
    path: PathBuf,
    out: BufWriter<File>,
}

impl EventLog {
    fn append(&mut self, event: &LogEvent) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, event)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        self.out.get_ref().sync_data()
    }
}

/// Replays a log file into a fresh state. A torn final line, as left by a
/// crash mid-write, is dropped; any other unreadable line is an error.
pub fn replay(path: &Path) -> Result<State, ServiceError> {
    let log_err = |line: usize, reason: String| ServiceError::Log(format!("{}:{line}: {reason}", path.display()));
    let reader = BufReader::new(File::open(path).map_err(|e| log_err(0, e.to_string()))?);
    let lines: Vec<String> = reader
        .lines()
        .collect::<io::Result<_>>()
        .map_err(|e| log_err(0, e.to_string()))?;
    let header: LogHeader = lines
        .first()
        .ok_or_else(|| log_err(1, "empty log".into()))
        .and_then(|l| serde_json::from_str(l).map_err(|e| log_err(1, e.to_string())))?;
    if header.format != LOG_FORMAT || header.version != LOG_VERSION {
        return Err(log_err(
            1,
            format!("unsupported log {} v{}", header.format, header.version),
        ));
    }
    let mut state = State::new(header.auto_advance);
    let last = lines.len() - 1;
    for (i, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let event: LogEvent = match serde_json::from_str(line) {
            Ok(e) => e,
            Err(_) if i == last => {
                log::warn!("dropping torn final log line {}", i + 1);
                break;
            }
            Err(e) => return Err(log_err(i + 1, e.to_string())),
        };
        apply(&mut state, &event).map_err(|e| log_err(i + 1, e.to_string()))?;
    }
    Ok(state)
}

struct Inner {
    state: State,
    log: Option<EventLog>,
}

/// Thread-safe workflow service. Every operation runs under one lock, so
/// lease acquisition and quorum aggregation are atomic.
pub struct AnnotationService {
    inner: Mutex<Inner>,
    clock: Arc<dyn Clock>,
    config: ServiceConfig,
}

impl AnnotationService {
    /// In-memory service without persistence.
    pub fn new(config: ServiceConfig, clock: Arc<dyn Clock>) -> Self {
        AnnotationService {
            inner: Mutex::new(Inner {
                state: State::new(config.auto_advance),
                log: None,
            }),
            clock,
            config,
        }
    }

    pub fn with_system_clock(config: ServiceConfig) -> Self {
        Self::new(config, Arc::new(SystemClock))
    }

    /// Service persisted to an event log at `path`, replaying it first
    /// when it exists. The log's own auto-advance setting wins over
    /// `config`.
    pub fn open(path: &Path, config: ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        let exists = path.metadata().is_ok_and(|m| m.len() > 0);
        let mut config = config;
        let state = if exists {
            let s = replay(path)?;
            config.auto_advance = s.auto_advance;
            s
        } else {
            State::new(config.auto_advance)
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| ServiceError::Log(format!("{}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        if !exists {
            let header = LogHeader {
                format: LOG_FORMAT.into(),
                version: LOG_VERSION,
                auto_advance: config.auto_advance,
            };
            serde_json::to_writer(&mut out, &header).map_err(|e| ServiceError::Log(e.to_string()))?;
            out.write_all(b"\n").and_then(|_| out.flush()).map_err(|e| ServiceError::Log(e.to_string()))?;
        }
        Ok(AnnotationService {
            inner: Mutex::new(Inner {
                state,
                log: Some(EventLog {
                    path: path.to_path_buf(),
                    out,
                }),
            }),
            clock,
            config,
        })
    }

    pub fn config(&self) -> ServiceConfig {
        self.config
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Applies a logged operation: runs it, then makes it durable before
    /// returning.
    fn logged<T>(
        &self,
        event: LogEvent,
        op: impl FnOnce(&mut State) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let mut inner = self.lock();
        let out = op(&mut inner.state)?;
        if let Some(log) = inner.log.as_mut() {
            log.append(&event)
                .map_err(|e| ServiceError::Log(format!("{}: {e}", log.path.display())))?;
        }
        Ok(out)
    }

    pub fn register_worker(&self, name: &str) -> Result<Worker, ServiceError> {
        {
            let inner = self.lock();
            if let Some(w) = inner.state.workers.values().find(|w| w.name == name.trim()) {
                return Ok(w.clone());
            }
        }
        self.logged(LogEvent::WorkerRegistered { name: name.trim().into() }, |s| s.register(name))
    }

    pub fn create_batch(&self, step: Step, input: BatchInput) -> Result<Vec<TaskId>, ServiceError> {
        self.logged(
            LogEvent::BatchCreated {
                step,
                input: input.clone(),
            },
            |s| s.create_batch(step, &input),
        )
    }

    pub fn next_task(&self, worker: WorkerId, step: Option<Step>) -> Result<Option<TaskView>, ServiceError> {
        let now = self.clock.now_ms();
        let lease = self.config.lease.as_millis() as u64;
        self.lock().state.next_task(worker, step, now, lease)
    }

    pub fn submit(&self, worker: WorkerId, task_id: TaskId, body: ResponseBody) -> Result<Acknowledgement, ServiceError> {
        let now = self.clock.now_ms();
        self.logged(
            LogEvent::ResponseSubmitted {
                worker_id: worker,
                task_id,
                body: body.clone(),
                at: now,
            },
            |s| s.submit(worker, task_id, body, now, Some(now)),
        )
    }

    pub fn resolve_expert(&self, item_id: ExpertItemId, approve: bool) -> Result<Vec<AggregationEvent>, ServiceError> {
        self.logged(LogEvent::ExpertResolved { item_id, approve }, |s| {
            s.resolve_expert(item_id, approve)
        })
    }

    pub fn expert_queue(&self) -> Vec<ExpertItem> {
        self.lock().state.expert_queue()
    }

    pub fn progress(&self) -> Progress {
        let now = self.clock.now_ms();
        let mut inner = self.lock();
        inner.state.reclaim(now);
        inner.state.progress()
    }

    pub fn records(&self) -> Vec<QuestionRecord> {
        self.lock().state.records()
    }

    /// Finished records in the dataset TSV format.
    pub fn export_tsv(&self) -> String {
        dataset_to_string(&self.records())
    }

    pub fn tasks(&self) -> Vec<AnnotationTask> {
        self.lock().state.tasks.values().cloned().collect()
    }

    /// Copy of the current state.
    pub fn snapshot(&self) -> State {
        self.lock().state.clone()
    }
}
