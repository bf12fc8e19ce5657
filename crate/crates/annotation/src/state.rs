//! Workflow state. Every transition is a pure function of the current
//! state and its arguments, so replaying the logged inputs rebuilds the
//! same state.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crsq_core::dataset::{
    aggregate_step1, aggregate_step2, assemble_record, na_record, QuestionRecord, Step1Outcome, Step2Outcome,
    WriteResponse,
};
use crsq_core::question::NA;
use serde::{Deserialize, Serialize};

use crate::model::*;
use crate::ServiceError;

/// A written question and the worker who wrote it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Authored {
    pub text: String,
    pub author: WorkerId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    Writing {
        task_id: TaskId,
    },
    AwaitingValidation {
        questions: Vec<Authored>,
    },
    Validating {
        questions: Vec<Authored>,
        task_ids: Vec<TaskId>,
        /// Per question: approved, rejected, or undecided.
        approved: Vec<Option<bool>>,
    },
    AwaitingParaphrase {
        questions: Vec<Authored>,
    },
    Paraphrasing {
        questions: Vec<Authored>,
        task_id: TaskId,
    },
    Done {
        record: QuestionRecord,
    },
}

/// One candidate sentence moving through the three steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub sentence_id: String,
    pub category: String,
    pub sentence: String,
    pub stage: Stage,
    /// Everyone who has answered a WRITE_QUESTION task for this sentence.
    pub writers: BTreeSet<WorkerId>,
    pub write_rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct State {
    pub auto_advance: bool,
    pub workers: BTreeMap<WorkerId, Worker>,
    pub tasks: BTreeMap<TaskId, AnnotationTask>,
    /// Sentence id to item, plus insertion order.
    pub items: BTreeMap<String, Item>,
    pub item_order: Vec<String>,
    pub experts: BTreeMap<ExpertItemId, ExpertItem>,
    /// Tasks that can still be leased (OPEN or LEASED).
    pub active: BTreeSet<TaskId>,
    #[serde(skip)]
    by_name: HashMap<String, WorkerId>,
}

fn checked_question(text: &str) -> Result<String, ServiceError> {
    let t = text.trim();
    if t.is_empty() || !t.ends_with('?') || t == NA {
        return Err(ServiceError::InvalidBody(format!("not a question: {text:?}")));
    }
    if t.contains(['\t', '\n', '\r']) {
        return Err(ServiceError::InvalidBody("question contains a tab or line break".into()));
    }
    Ok(t.to_string())
}

fn same_text(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

impl State {
    pub fn new(auto_advance: bool) -> Self {
        State {
            auto_advance,
            ..State::default()
        }
    }

    /// Rebuilds lookup tables skipped by serialization.
    pub fn reindex(&mut self) {
        self.by_name = self.workers.values().map(|w| (w.name.clone(), w.worker_id)).collect();
    }

    pub fn register(&mut self, name: &str) -> Result<Worker, ServiceError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ServiceError::InvalidBody("empty worker name".into()));
        }
        if let Some(id) = self.by_name.get(name) {
            return Ok(self.workers[id].clone());
        }
        let worker = Worker {
            worker_id: self.workers.len() as WorkerId + 1,
            name: name.to_string(),
        };
        self.by_name.insert(worker.name.clone(), worker.worker_id);
        self.workers.insert(worker.worker_id, worker.clone());
        Ok(worker)
    }

    fn next_task_id(&self) -> TaskId {
        self.tasks.keys().next_back().map_or(1, |id| id + 1)
    }

    fn push_task(&mut self, payload: Payload, excluded: BTreeSet<WorkerId>) -> TaskId {
        let task_id = self.next_task_id();
        self.tasks.insert(
            task_id,
            AnnotationTask {
                task_id,
                step: payload.step(),
                payload,
                state: TaskState::Open,
                responses: Vec::new(),
                excluded,
                lease: None,
            },
        );
        self.active.insert(task_id);
        task_id
    }

    fn write_task(&mut self, sentence_id: &str) -> TaskId {
        let item = &self.items[sentence_id];
        let payload = Payload::WriteQuestion {
            sentence_id: item.sentence_id.clone(),
            category: item.category.clone(),
            sentence: item.sentence.clone(),
        };
        let excluded = item.writers.clone();
        let id = self.push_task(payload, excluded);
        let item = self.items.get_mut(sentence_id).expect("item exists");
        item.write_rounds += 1;
        item.stage = Stage::Writing { task_id: id };
        id
    }

    fn validation_tasks(&mut self, sentence_id: &str) -> Result<Vec<TaskId>, ServiceError> {
        let item = &self.items[sentence_id];
        let Stage::AwaitingValidation { questions } = &item.stage else {
            return Err(ServiceError::BadBatch(format!("{sentence_id}: no accepted questions to validate")));
        };
        let questions = questions.clone();
        let category = item.category.clone();
        let mut ids = Vec::new();
        for (k, q) in questions.iter().enumerate() {
            let payload = Payload::Validate {
                sentence_id: sentence_id.to_string(),
                category: category.clone(),
                question_index: k,
                question: q.text.clone(),
            };
            ids.push(self.push_task(payload, BTreeSet::from([q.author])));
        }
        let item = self.items.get_mut(sentence_id).expect("item exists");
        item.stage = Stage::Validating {
            approved: vec![None; questions.len()],
            questions,
            task_ids: ids.clone(),
        };
        Ok(ids)
    }

    fn paraphrase_task(&mut self, sentence_id: &str) -> Result<TaskId, ServiceError> {
        let item = &self.items[sentence_id];
        let Stage::AwaitingParaphrase { questions } = &item.stage else {
            return Err(ServiceError::BadBatch(format!("{sentence_id}: questions not yet approved")));
        };
        let questions = questions.clone();
        let payload = Payload::Paraphrase {
            sentence_id: sentence_id.to_string(),
            category: item.category.clone(),
            questions: questions.iter().map(|q| q.text.clone()).collect(),
        };
        let authors = questions.iter().map(|q| q.author).collect();
        let id = self.push_task(payload, authors);
        self.items.get_mut(sentence_id).expect("item exists").stage = Stage::Paraphrasing {
            questions,
            task_id: id,
        };
        Ok(id)
    }

    pub fn create_batch(&mut self, step: Step, input: &BatchInput) -> Result<Vec<TaskId>, ServiceError> {
        match (step, input) {
            (Step::WriteQuestion, BatchInput::Sentences { sentences }) => {
                if sentences.is_empty() {
                    return Err(ServiceError::EmptyBatch);
                }
                let mut seen = BTreeSet::new();
                let ids: Vec<String> = sentences
                    .iter()
                    .enumerate()
                    .map(|(k, s)| {
                        s.id.clone()
                            .filter(|i| !i.trim().is_empty())
                            .unwrap_or_else(|| format!("{:05}", self.item_order.len() + k + 1))
                    })
                    .collect();
                for (id, s) in ids.iter().zip(sentences) {
                    if self.items.contains_key(id) || !seen.insert(id) {
                        return Err(ServiceError::BadBatch(format!("duplicate sentence id {id:?}")));
                    }
                    if s.sentence.trim().is_empty() || s.category.trim().is_empty() {
                        return Err(ServiceError::BadBatch(format!("{id}: empty sentence or category")));
                    }
                }
                let mut tasks = Vec::new();
                for (id, s) in ids.into_iter().zip(sentences) {
                    self.items.insert(
                        id.clone(),
                        Item {
                            sentence_id: id.clone(),
                            category: s.category.trim().to_string(),
                            sentence: s.sentence.trim().to_string(),
                            stage: Stage::Writing { task_id: 0 },
                            writers: BTreeSet::new(),
                            write_rounds: 0,
                        },
                    );
                    self.item_order.push(id.clone());
                    tasks.push(self.write_task(&id));
                }
                Ok(tasks)
            }
            (Step::Validate | Step::Paraphrase, BatchInput::SentenceIds { sentence_ids }) => {
                if sentence_ids.is_empty() {
                    return Err(ServiceError::EmptyBatch);
                }
                for id in sentence_ids {
                    let item = self
                        .items
                        .get(id)
                        .ok_or_else(|| ServiceError::BadBatch(format!("unknown sentence {id:?}")))?;
                    let ready = match step {
                        Step::Validate => matches!(item.stage, Stage::AwaitingValidation { .. }),
                        _ => matches!(item.stage, Stage::AwaitingParaphrase { .. }),
                    };
                    if !ready {
                        let why = match &item.stage {
                            Stage::Done { record } if record.is_na() => "step 1 decided N/A",
                            _ => "not waiting for this step",
                        };
                        return Err(ServiceError::BadBatch(format!("{id}: {why}")));
                    }
                }
                let mut tasks = Vec::new();
                for id in sentence_ids {
                    match step {
                        Step::Validate => tasks.extend(self.validation_tasks(id)?),
                        _ => tasks.push(self.paraphrase_task(id)?),
                    }
                }
                Ok(tasks)
            }
            _ => Err(ServiceError::BadBatch(format!("input does not match step {step}"))),
        }
    }

    /// Returns expired leases to OPEN.
    pub fn reclaim(&mut self, now: u64) {
        for id in &self.active {
            let t = self.tasks.get_mut(id).expect("active task exists");
            if t.lease.is_some_and(|l| l.expires_at <= now) {
                t.lease = None;
                t.state = TaskState::Open;
            }
        }
    }

    fn check_worker(&self, worker: WorkerId) -> Result<(), ServiceError> {
        if self.workers.contains_key(&worker) {
            Ok(())
        } else {
            Err(ServiceError::UnknownWorker(worker))
        }
    }

    /// Leases the oldest task the worker may take. A worker holds at most
    /// one lease; asking again returns the held task when it fits the
    /// filter and releases it otherwise.
    pub fn next_task(
        &mut self,
        worker: WorkerId,
        step: Option<Step>,
        now: u64,
        lease_ms: u64,
    ) -> Result<Option<TaskView>, ServiceError> {
        self.check_worker(worker)?;
        self.reclaim(now);
        let held = self
            .active
            .iter()
            .copied()
            .find(|id| self.tasks[id].lease.is_some_and(|l| l.worker_id == worker));
        if let Some(id) = held {
            let t = self.tasks.get_mut(&id).expect("held task exists");
            if step.is_none_or(|s| s == t.step) {
                let lease = t.lease.expect("held lease");
                return Ok(Some(TaskView {
                    task_id: id,
                    step: t.step,
                    payload: t.payload.clone(),
                    lease_expires_at: lease.expires_at,
                }));
            }
            t.lease = None;
            t.state = TaskState::Open;
        }
        let pick = self.active.iter().copied().find(|id| {
            let t = &self.tasks[id];
            t.state == TaskState::Open
                && step.is_none_or(|s| s == t.step)
                && !t.excluded.contains(&worker)
                && !t.answered_by(worker)
        });
        Ok(pick.map(|id| {
            let t = self.tasks.get_mut(&id).expect("picked task exists");
            let lease = Lease {
                worker_id: worker,
                expires_at: now + lease_ms,
            };
            t.lease = Some(lease);
            t.state = TaskState::Leased;
            TaskView {
                task_id: id,
                step: t.step,
                payload: t.payload.clone(),
                lease_expires_at: lease.expires_at,
            }
        }))
    }

    /// Records a response. With `now` given the worker must hold an
    /// unexpired lease on the task; replay passes `None`.
    pub fn submit(
        &mut self,
        worker: WorkerId,
        task_id: TaskId,
        body: ResponseBody,
        at: u64,
        now: Option<u64>,
    ) -> Result<Acknowledgement, ServiceError> {
        self.check_worker(worker)?;
        let task = self.tasks.get(&task_id).ok_or(ServiceError::UnknownTask(task_id))?;
        if task.answered_by(worker) {
            return Err(ServiceError::Duplicate { worker, task: task_id });
        }
        if !self.active.contains(&task_id) {
            return Err(ServiceError::StaleLease { worker, task: task_id });
        }
        if let Some(now) = now {
            let holds = task.lease.is_some_and(|l| l.worker_id == worker && l.expires_at > now);
            if !holds {
                return Err(ServiceError::StaleLease { worker, task: task_id });
            }
        }
        if !body.fits(task.step) {
            return Err(ServiceError::BodyMismatch(task.step));
        }
        let body = match body {
            ResponseBody::Question { text } => ResponseBody::Question {
                text: checked_question(&text)?,
            },
            ResponseBody::Paraphrase { text } => {
                let text = checked_question(&text)?;
                if let Payload::Paraphrase { questions, .. } = &task.payload {
                    if questions.iter().any(|q| same_text(q, &text)) {
                        return Err(ServiceError::InvalidBody("paraphrase repeats a shown question".into()));
                    }
                }
                ResponseBody::Paraphrase { text }
            }
            other => other,
        };
        let task = self.tasks.get_mut(&task_id).expect("task exists");
        task.responses.push(WorkerResponse {
            worker_id: worker,
            task_id,
            body,
            submitted_at: at,
        });
        task.lease = None;
        task.state = TaskState::Open;
        let mut events = Vec::new();
        let n = task.responses.len();
        if n == task.step.quorum() {
            task.state = TaskState::QuorumReached;
            self.active.remove(&task_id);
            self.aggregate(task_id, &mut events);
        }
        Ok(Acknowledgement {
            task_id,
            responses: n,
            events,
        })
    }

    fn set_state(&mut self, task_id: TaskId, state: TaskState) {
        self.tasks.get_mut(&task_id).expect("task exists").state = state;
    }

    fn aggregate(&mut self, task_id: TaskId, events: &mut Vec<AggregationEvent>) {
        let task = &self.tasks[&task_id];
        let sentence_id = task.payload.sentence_id().to_string();
        match task.step {
            Step::WriteQuestion => {
                let answers: Vec<WriteResponse> = task
                    .responses
                    .iter()
                    .map(|r| match &r.body {
                        ResponseBody::Question { text } => WriteResponse::Question(text.clone()),
                        _ => WriteResponse::NotApplicable,
                    })
                    .collect();
                let authors: Vec<WorkerId> = task.responses.iter().map(|r| r.worker_id).collect();
                let outcome = aggregate_step1(&answers).expect("quorum matches rule arity");
                let item = self.items.get_mut(&sentence_id).expect("item exists");
                item.writers.extend(&authors);
                match outcome {
                    Step1Outcome::Accepted(qs) => {
                        self.set_state(task_id, TaskState::Closed);
                        let questions = qs
                            .into_iter()
                            .zip(authors)
                            .map(|(text, author)| Authored { text, author })
                            .collect();
                        self.items.get_mut(&sentence_id).expect("item exists").stage =
                            Stage::AwaitingValidation { questions };
                        events.push(AggregationEvent::QuestionsAccepted {
                            sentence_id: sentence_id.clone(),
                            task_id,
                        });
                        if self.auto_advance {
                            let task_ids = self.validation_tasks(&sentence_id).expect("awaiting validation");
                            events.push(AggregationEvent::ValidationTasksCreated { sentence_id, task_ids });
                        }
                    }
                    Step1Outcome::NotApplicable => {
                        self.set_state(task_id, TaskState::Closed);
                        let item = self.items.get_mut(&sentence_id).expect("item exists");
                        item.stage = Stage::Done {
                            record: na_record(&item.sentence_id, &item.category, &item.sentence),
                        };
                        events.push(AggregationEvent::NotApplicable { sentence_id, task_id });
                    }
                    Step1Outcome::Rerun => {
                        self.set_state(task_id, TaskState::RerunSpawned);
                        let new_task_id = self.write_task(&sentence_id);
                        events.push(AggregationEvent::RerunSpawned {
                            sentence_id,
                            task_id,
                            new_task_id,
                        });
                    }
                }
            }
            Step::Validate => {
                let verdicts: Vec<_> = task
                    .responses
                    .iter()
                    .filter_map(|r| match &r.body {
                        ResponseBody::Verdict(v) => Some(*v),
                        _ => None,
                    })
                    .collect();
                let Payload::Validate { question, .. } = &task.payload else {
                    unreachable!("validate task carries a validate payload")
                };
                let question = question.clone();
                let outcome = aggregate_step2(&verdicts).expect("quorum matches rule arity");
                events.push(AggregationEvent::ValidationDecided {
                    sentence_id: sentence_id.clone(),
                    task_id,
                    outcome,
                });
                match outcome {
                    Step2Outcome::Approved => self.decide_question(task_id, true, events),
                    Step2Outcome::Rejected => self.decide_question(task_id, false, events),
                    Step2Outcome::ExpertReview => {
                        let item_id = self.experts.keys().next_back().map_or(1, |k| k + 1);
                        self.experts.insert(
                            item_id,
                            ExpertItem {
                                item_id,
                                task_id,
                                sentence_id: sentence_id.clone(),
                                question,
                                verdicts,
                                approved: None,
                            },
                        );
                        events.push(AggregationEvent::ExpertQueued { sentence_id, item_id });
                    }
                }
            }
            Step::Paraphrase => {
                let paraphrases: Vec<String> = task
                    .responses
                    .iter()
                    .filter_map(|r| match &r.body {
                        ResponseBody::Paraphrase { text } => Some(text.clone()),
                        _ => None,
                    })
                    .collect();
                self.set_state(task_id, TaskState::Closed);
                let item = self.items.get_mut(&sentence_id).expect("item exists");
                let Stage::Paraphrasing { questions, .. } = &item.stage else {
                    unreachable!("paraphrase task belongs to a paraphrasing item")
                };
                let generated: Vec<String> = questions.iter().map(|q| q.text.clone()).collect();
                let record = assemble_record(&item.sentence_id, &item.category, &item.sentence, &generated, &paraphrases)
                    .expect("three questions and two paraphrases");
                item.stage = Stage::Done { record };
                events.push(AggregationEvent::RecordCompleted { sentence_id });
            }
        }
    }

    /// Stores the decision on one validated question and, once all three
    /// are decided, moves the sentence on: to paraphrasing when all were
    /// approved, back to step 1 otherwise.
    fn decide_question(&mut self, task_id: TaskId, approve: bool, events: &mut Vec<AggregationEvent>) {
        let sentence_id = self.tasks[&task_id].payload.sentence_id().to_string();
        let item = self.items.get_mut(&sentence_id).expect("item exists");
        let Stage::Validating { questions, task_ids, approved } = &mut item.stage else {
            unreachable!("validate task belongs to a validating item")
        };
        let k = task_ids.iter().position(|t| *t == task_id).expect("task listed on its item");
        approved[k] = Some(approve);
        if approved.iter().any(Option::is_none) {
            return;
        }
        let all = approved.iter().all(|a| *a == Some(true));
        let questions = questions.clone();
        let task_ids = task_ids.clone();
        for t in task_ids {
            self.set_state(t, TaskState::Closed);
        }
        if all {
            self.items.get_mut(&sentence_id).expect("item exists").stage = Stage::AwaitingParaphrase { questions };
            if self.auto_advance {
                let task_id = self.paraphrase_task(&sentence_id).expect("awaiting paraphrase");
                events.push(AggregationEvent::ParaphraseTaskCreated { sentence_id, task_id });
            }
        } else {
            let new_task_id = self.write_task(&sentence_id);
            events.push(AggregationEvent::Requeued { sentence_id, new_task_id });
        }
    }

    pub fn resolve_expert(
        &mut self,
        item_id: ExpertItemId,
        approve: bool,
    ) -> Result<Vec<AggregationEvent>, ServiceError> {
        let item = self.experts.get_mut(&item_id).ok_or(ServiceError::UnknownExpertItem(item_id))?;
        if item.approved.is_some() {
            return Err(ServiceError::ExpertResolved(item_id));
        }
        item.approved = Some(approve);
        let task_id = item.task_id;
        let mut events = Vec::new();
        self.decide_question(task_id, approve, &mut events);
        Ok(events)
    }

    pub fn expert_queue(&self) -> Vec<ExpertItem> {
        self.experts.values().filter(|e| e.approved.is_none()).cloned().collect()
    }

    pub fn progress(&self) -> Progress {
        let mut p = Progress::default();
        for t in self.tasks.values() {
            let s = match t.step {
                Step::WriteQuestion => &mut p.write_question,
                Step::Validate => &mut p.validate,
                Step::Paraphrase => &mut p.paraphrase,
            };
            s.total += 1;
            match t.state {
                TaskState::Open => s.open += 1,
                TaskState::Leased => s.leased += 1,
                TaskState::QuorumReached => s.quorum_reached += 1,
                TaskState::Closed => s.closed += 1,
                TaskState::RerunSpawned => s.rerun += 1,
            }
        }
        p.validate.expert_queue = self.experts.values().filter(|e| e.approved.is_none()).count();
        p.sentences = self.items.len();
        for item in self.items.values() {
            if let Stage::Done { record } = &item.stage {
                p.records_completed += 1;
                if record.is_na() {
                    p.records_na += 1;
                }
            }
        }
        p
    }

    /// Finished records in batch order.
    pub fn records(&self) -> Vec<QuestionRecord> {
        self.item_order
            .iter()
            .filter_map(|id| match &self.items[id].stage {
                Stage::Done { record } => Some(record.clone()),
                _ => None,
            })
            .collect()
    }

    /// Copy without leases, for comparing states across restarts.
    pub fn without_leases(&self) -> State {
        let mut s = self.clone();
        for t in s.tasks.values_mut() {
            if t.state == TaskState::Leased {
                t.state = TaskState::Open;
            }
            t.lease = None;
        }
        s
    }
}
