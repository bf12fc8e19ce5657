//! Line protocol to an external question generator: one request line
//! `category<TAB>sentence` in, one response line out. A response of exactly
//! `N/A` is the not-applicable sentinel.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::template::{category_noun, external_flags, TemplateConfig};
use super::{ElicitationQuestion, Provenance, QuestionLabel, NA};
use crate::select::CandidateSentence;

pub const DEFAULT_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdapterError {
    #[error("adapter timed out after {0:?}")]
    Timeout(Duration),
    #[error("malformed adapter output: {0:?}")]
    Malformed(String),
    #[error("adapter unreachable: {0}")]
    Unreachable(String),
}

pub trait QuestionAdapter: Send + Sync {
    /// Sends one request line and returns the response line without its
    /// terminator.
    fn request(&self, line: &str, timeout: Duration) -> Result<String, AdapterError>;
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<io::Result<String>>,
}

impl Worker {
    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Adapter backed by child processes speaking the line protocol over
/// stdin/stdout. Children are reused; one that times out or misbehaves is
/// killed and replaced on the next request.
pub struct ProcessAdapter {
    program: String,
    args: Vec<String>,
    idle: Mutex<Vec<Worker>>,
}

impl ProcessAdapter {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        ProcessAdapter {
            program: program.into(),
            args,
            idle: Mutex::new(Vec::new()),
        }
    }

    /// Runs `command` through `sh -c`.
    pub fn shell(command: &str) -> Self {
        ProcessAdapter::new("sh", vec!["-c".into(), command.into()])
    }

    fn spawn(&self) -> Result<Worker, AdapterError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AdapterError::Unreachable(format!("cannot start {}: {e}", self.program)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Worker { child, stdin, lines: rx })
    }

    fn checkout(&self) -> Result<Worker, AdapterError> {
        let reused = self.idle.lock().unwrap_or_else(|e| e.into_inner()).pop();
        match reused {
            Some(w) => Ok(w),
            None => self.spawn(),
        }
    }
}

impl QuestionAdapter for ProcessAdapter {
    fn request(&self, line: &str, timeout: Duration) -> Result<String, AdapterError> {
        let mut worker = self.checkout()?;
        if let Err(e) = writeln!(worker.stdin, "{line}").and_then(|_| worker.stdin.flush()) {
            worker.kill();
            return Err(AdapterError::Unreachable(format!("write failed: {e}")));
        }
        match worker.lines.recv_timeout(timeout) {
            Ok(Ok(resp)) => {
                self.idle.lock().unwrap_or_else(|e| e.into_inner()).push(worker);
                Ok(resp)
            }
            Ok(Err(e)) => {
                worker.kill();
                Err(AdapterError::Unreachable(format!("read failed: {e}")))
            }
            Err(RecvTimeoutError::Disconnected) => {
                worker.kill();
                Err(AdapterError::Unreachable("adapter closed its output".into()))
            }
            Err(RecvTimeoutError::Timeout) => {
                worker.kill();
                Err(AdapterError::Timeout(timeout))
            }
        }
    }
}

impl Drop for ProcessAdapter {
    fn drop(&mut self) {
        let idle = std::mem::take(self.idle.get_mut().unwrap_or_else(|e| e.into_inner()));
        for w in idle {
            w.kill();
        }
    }
}

/// Adapter backed by an HTTP endpoint: the request line is POSTed as
/// `text/plain` and the first line of the response body is the answer.
pub struct HttpAdapter {
    url: String,
    agent: ureq::Agent,
}

impl HttpAdapter {
    pub fn new(url: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(true).build().into();
        HttpAdapter { url: url.into(), agent }
    }
}

impl QuestionAdapter for HttpAdapter {
    fn request(&self, line: &str, timeout: Duration) -> Result<String, AdapterError> {
        let result = self
            .agent
            .post(&self.url)
            .config()
            .timeout_global(Some(timeout))
            .build()
            .header("content-type", "text/plain; charset=utf-8")
            .send(line);
        let mut resp = result.map_err(|e| match e {
            ureq::Error::Timeout(_) => AdapterError::Timeout(timeout),
            other => AdapterError::Unreachable(other.to_string()),
        })?;
        let body = resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => AdapterError::Timeout(timeout),
            other => AdapterError::Unreachable(other.to_string()),
        })?;
        Ok(body.lines().next().unwrap_or("").to_string())
    }
}

fn one_line(s: &str) -> String {
    s.chars().map(|c| if c == '\t' || c == '\n' || c == '\r' { ' ' } else { c }).collect()
}

/// Wire request for a candidate: category, a tab, the raw sentence text.
pub fn request_line(candidate: &CandidateSentence) -> String {
    format!("{}\t{}", one_line(&candidate.category), one_line(&candidate.sentence.text))
}

/// Asks the adapter for a question about `candidate` and validates the
/// answer.
pub fn generate_external(
    candidate: &CandidateSentence,
    adapter: &dyn QuestionAdapter,
    timeout: Duration,
) -> Result<QuestionLabel, AdapterError> {
    let resp = adapter.request(&request_line(candidate), timeout)?;
    let text = resp.trim();
    if text == NA {
        return Ok(QuestionLabel::NotApplicable);
    }
    if text.is_empty() || !text.ends_with('?') {
        return Err(AdapterError::Malformed(resp));
    }
    let noun = category_noun(&candidate.category, &TemplateConfig::default()).ok();
    Ok(QuestionLabel::Question(ElicitationQuestion {
        text: text.to_string(),
        category: candidate.category.clone(),
        review_id: candidate.sentence.source_review_id.clone(),
        sentence_index: candidate.sentence.index_in_review,
        usage_clause: String::new(),
        provenance: Provenance::ExternalModel,
        flags: external_flags(text, noun.as_deref()),
    }))
}

/// Runs [`generate_external`] over `candidates` with at most `in_flight`
/// requests outstanding. Results come back in input order; a failed item
/// never stops the others.
pub fn generate_external_batch(
    candidates: &[CandidateSentence],
    adapter: &dyn QuestionAdapter,
    timeout: Duration,
    in_flight: usize,
) -> Vec<Result<QuestionLabel, AdapterError>> {
    let next = AtomicUsize::new(0);
    let workers = in_flight.max(1).min(candidates.len());
    let mut results: Vec<(usize, Result<QuestionLabel, AdapterError>)> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(c) = candidates.get(i) else { break };
                        out.push((i, generate_external(c, adapter, timeout)));
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("adapter worker panicked"))
            .collect()
    });
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, r)| r).collect()
}
