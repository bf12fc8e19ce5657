use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crsq_core::dataset::{Step2Outcome, ValidationVerdict};
use serde::{Deserialize, Serialize};

pub type TaskId = u64;
pub type WorkerId = u64;
pub type ExpertItemId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Step {
    WriteQuestion,
    Validate,
    Paraphrase,
}

impl Step {
    pub const ALL: [Step; 3] = [Step::WriteQuestion, Step::Validate, Step::Paraphrase];

    /// Responses from distinct workers needed before aggregation.
    pub fn quorum(self) -> usize {
        match self {
            Step::WriteQuestion | Step::Validate => 3,
            Step::Paraphrase => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Step::WriteQuestion => "WRITE_QUESTION",
            Step::Validate => "VALIDATE",
            Step::Paraphrase => "PARAPHRASE",
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Step {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "write_question" | "write" | "1" => Ok(Step::WriteQuestion),
            "validate" | "2" => Ok(Step::Validate),
            "paraphrase" | "3" => Ok(Step::Paraphrase),
            _ => Err(format!("unknown step {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskState {
    Open,
    Leased,
    QuorumReached,
    Closed,
    RerunSpawned,
}

/// What a worker is shown. Paraphrase payloads carry the questions only,
/// never the source sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    WriteQuestion {
        sentence_id: String,
        category: String,
        sentence: String,
    },
    Validate {
        sentence_id: String,
        category: String,
        question_index: usize,
        question: String,
    },
    Paraphrase {
        sentence_id: String,
        category: String,
        questions: Vec<String>,
    },
}

impl Payload {
    pub fn step(&self) -> Step {
        match self {
            Payload::WriteQuestion { .. } => Step::WriteQuestion,
            Payload::Validate { .. } => Step::Validate,
            Payload::Paraphrase { .. } => Step::Paraphrase,
        }
    }

    pub fn sentence_id(&self) -> &str {
        match self {
            Payload::WriteQuestion { sentence_id, .. }
            | Payload::Validate { sentence_id, .. }
            | Payload::Paraphrase { sentence_id, .. } => sentence_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ResponseBody {
    Question { text: String },
    NotApplicable,
    Verdict(ValidationVerdict),
    Paraphrase { text: String },
}

impl ResponseBody {
    pub fn fits(&self, step: Step) -> bool {
        matches!(
            (self, step),
            (ResponseBody::Question { .. } | ResponseBody::NotApplicable, Step::WriteQuestion)
                | (ResponseBody::Verdict(_), Step::Validate)
                | (ResponseBody::Paraphrase { .. }, Step::Paraphrase)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerResponse {
    pub worker_id: WorkerId,
    pub task_id: TaskId,
    pub body: ResponseBody,
    /// Milliseconds since the Unix epoch.
    pub submitted_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lease {
    pub worker_id: WorkerId,
    pub expires_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: TaskId,
    pub step: Step,
    pub payload: Payload,
    pub state: TaskState,
    pub responses: Vec<WorkerResponse>,
    /// Workers who may not take this task.
    pub excluded: BTreeSet<WorkerId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lease: Option<Lease>,
}

impl AnnotationTask {
    pub fn answered_by(&self, worker: WorkerId) -> bool {
        self.responses.iter().any(|r| r.worker_id == worker)
    }
}

/// A task as handed to a worker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    pub task_id: TaskId,
    pub step: Step,
    pub payload: Payload,
    pub lease_expires_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Worker {
    pub worker_id: WorkerId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertItem {
    pub item_id: ExpertItemId,
    pub task_id: TaskId,
    pub sentence_id: String,
    pub question: String,
    pub verdicts: Vec<ValidationVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approved: Option<bool>,
}

/// Something that happened when a response or expert decision completed
/// a quorum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum AggregationEvent {
    QuestionsAccepted { sentence_id: String, task_id: TaskId },
    NotApplicable { sentence_id: String, task_id: TaskId },
    RerunSpawned { sentence_id: String, task_id: TaskId, new_task_id: TaskId },
    ValidationDecided { sentence_id: String, task_id: TaskId, outcome: Step2Outcome },
    ExpertQueued { sentence_id: String, item_id: ExpertItemId },
    ValidationTasksCreated { sentence_id: String, task_ids: Vec<TaskId> },
    Requeued { sentence_id: String, new_task_id: TaskId },
    ParaphraseTaskCreated { sentence_id: String, task_id: TaskId },
    RecordCompleted { sentence_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acknowledgement {
    pub task_id: TaskId,
    pub responses: usize,
    pub events: Vec<AggregationEvent>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepProgress {
    pub total: usize,
    pub open: usize,
    pub leased: usize,
    pub quorum_reached: usize,
    pub closed: usize,
    pub rerun: usize,
    pub expert_queue: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub write_question: StepProgress,
    pub validate: StepProgress,
    pub paraphrase: StepProgress,
    pub sentences: usize,
    pub records_completed: usize,
    pub records_na: usize,
}

impl Progress {
    pub fn step(&self, step: Step) -> &StepProgress {
        match step {
            Step::WriteQuestion => &self.write_question,
            Step::Validate => &self.validate,
            Step::Paraphrase => &self.paraphrase,
        }
    }
}

/// One input sentence of a WRITE_QUESTION batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub category: String,
    pub sentence: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchInput {
    Sentences { sentences: Vec<SentenceInput> },
    /// Sentences that finished the previous step.
    SentenceIds { sentence_ids: Vec<String> },
}
