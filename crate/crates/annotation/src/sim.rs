//! Simulated annotators for load tests and smoke runs.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use crsq_core::dataset::{Asker, ValidationVerdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::*;
use crate::{AnnotationService, ServiceError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub workers: usize,
    pub seed: u64,
    /// Share of sentences the workers mostly judge not applicable.
    pub na_sentences: f64,
    /// Chance that a worker marks any one validation check invalid.
    pub invalid_rate: f64,
    pub deadline: Duration,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            workers: 20,
            seed: 0,
            na_sentences: 0.25,
            invalid_rate: 0.04,
            deadline: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimReport {
    pub submissions: usize,
    pub rejected_submissions: usize,
    pub expert_decisions: usize,
    pub finished: bool,
    pub elapsed_ms: u64,
}

fn mostly_na(sentence_id: &str, share: f64, seed: u64) -> bool {
    let h = sentence_id
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64 ^ seed, |h, b| (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3));
    ChaCha8Rng::seed_from_u64(h).gen_bool(share)
}

fn answer(task: &TaskView, worker: &Worker, rng: &mut ChaCha8Rng, cfg: &SimConfig) -> ResponseBody {
    match &task.payload {
        Payload::WriteQuestion { sentence_id, category, .. } => {
            let na_p = if mostly_na(sentence_id, cfg.na_sentences, cfg.seed) { 0.9 } else { 0.05 };
            if rng.gen_bool(na_p) {
                ResponseBody::NotApplicable
            } else {
                ResponseBody::Question {
                    text: format!(
                        "Would you like a {} for use {} suggested by {}?",
                        category.to_lowercase(),
                        rng.gen_range(0..100),
                        worker.name
                    ),
                }
            }
        }
        Payload::Validate { .. } => {
            let mut bad = || rng.gen_bool(cfg.invalid_rate);
            ResponseBody::Verdict(ValidationVerdict {
                grammatical: !bad(),
                yesno_answerable: !bad(),
                mentions_usage: !bad(),
                asker: if bad() { Asker::Buyer } else { Asker::Salesperson },
            })
        }
        Payload::Paraphrase { questions, .. } => ResponseBody::Paraphrase {
            text: format!(
                "{}, as {} would put it?",
                questions[rng.gen_range(0..questions.len())].trim_end_matches('?'),
                worker.name
            ),
        },
    }
}

/// Runs `cfg.workers` worker threads against `service` until every
/// sentence has a finished record or the deadline passes. The first
/// worker also settles expert items, approving two in three.
pub fn run(service: &AnnotationService, cfg: SimConfig) -> Result<SimReport, ServiceError> {
    let workers: Vec<Worker> = (0..cfg.workers)
        .map(|i| service.register_worker(&format!("sim-{i:02}")))
        .collect::<Result<_, _>>()?;
    let start = Instant::now();
    let done = AtomicBool::new(false);
    let submissions = AtomicUsize::new(0);
    let rejected = AtomicUsize::new(0);
    let expert = AtomicUsize::new(0);
    let finished = |svc: &AnnotationService| {
        let p = svc.progress();
        p.records_completed == p.sentences
    };
    thread::scope(|scope| {
        for (i, worker) in workers.iter().enumerate() {
            let (done, submissions, rejected, expert) = (&done, &submissions, &rejected, &expert);
            scope.spawn(move || {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64 * 7919));
                while !done.load(Ordering::Relaxed) {
                    if start.elapsed() > cfg.deadline {
                        done.store(true, Ordering::Relaxed);
                        break;
                    }
                    if i == 0 {
                        for item in service.expert_queue() {
                            if service.resolve_expert(item.item_id, rng.gen_bool(2.0 / 3.0)).is_ok() {
                                expert.fetch_add(1, Ordering::Relaxed);
                            }
                        }
                    }
                    let task = match service.next_task(worker.worker_id, None) {
                        Ok(Some(t)) => t,
                        Ok(None) => {
                            if finished(service) {
                                done.store(true, Ordering::Relaxed);
                            } else {
                                thread::sleep(Duration::from_millis(1));
                            }
                            continue;
                        }
                        Err(_) => break,
                    };
                    let body = answer(&task, worker, &mut rng, &cfg);
                    match service.submit(worker.worker_id, task.task_id, body) {
                        Ok(_) => submissions.fetch_add(1, Ordering::Relaxed),
                        Err(_) => rejected.fetch_add(1, Ordering::Relaxed),
                    };
                }
            });
        }
    });
    Ok(SimReport {
        submissions: submissions.into_inner(),
        rejected_submissions: rejected.into_inner(),
        expert_decisions: expert.into_inner(),
        finished: finished(service),
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}
