//! Local three-step annotation workflow: annotators write questions for a
//! candidate sentence (or mark it N/A), validate each question, then
//! paraphrase the approved triple. Responses are aggregated at quorum with
//! the dataset rules, and every input is kept in an append-only event log.

mod clock;
pub mod http;
pub mod model;
mod service;
pub mod sim;
pub mod state;

pub use clock::{Clock, ManualClock, SystemClock};
pub use model::*;
pub use service::{replay, AnnotationService, LogEvent, ServiceConfig, LOG_FORMAT, LOG_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown worker {0}")]
    UnknownWorker(WorkerId),
    #[error("unknown task {0}")]
    UnknownTask(TaskId),
    #[error("worker {worker} holds no current lease on task {task}")]
    StaleLease { worker: WorkerId, task: TaskId },
    #[error("worker {worker} already answered task {task}")]
    Duplicate { worker: WorkerId, task: TaskId },
    #[error("response body does not fit a {0} task")]
    BodyMismatch(Step),
    #[error("invalid response: {0}")]
    InvalidBody(String),
    #[error("batch has no inputs")]
    EmptyBatch,
    #[error("bad batch: {0}")]
    BadBatch(String),
    #[error("unknown expert item {0}")]
    UnknownExpertItem(ExpertItemId),
    #[error("expert item {0} already resolved")]
    ExpertResolved(ExpertItemId),
    #[error("event log: {0}")]
    Log(String),
}

impl ServiceError {
    /// Stable machine-readable name.
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::UnknownWorker(_) => "unknown_worker",
            ServiceError::UnknownTask(_) => "unknown_task",
            ServiceError::StaleLease { .. } => "stale_lease",
            ServiceError::Duplicate { .. } => "duplicate_submission",
            ServiceError::BodyMismatch(_) => "body_step_mismatch",
            ServiceError::InvalidBody(_) => "invalid_body",
            ServiceError::EmptyBatch => "empty_batch",
            ServiceError::BadBatch(_) => "bad_batch",
            ServiceError::UnknownExpertItem(_) => "unknown_expert_item",
            ServiceError::ExpertResolved(_) => "expert_item_resolved",
            ServiceError::Log(_) => "event_log",
        }
    }
}
