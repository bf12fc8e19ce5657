//! Scoring generator output against reference records, train/test
//! splitting, and training-data reduction.

pub mod metrics;

use std::collections::{HashMap, HashSet};
use std::io::BufRead;

use rand::seq::{index::sample, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{QuestionRecord, RecordLabel, GENERATED_PER_RECORD, QUESTIONS_PER_RECORD};
use crate::exec::Execution;
use crate::question::GeneratedRecord;
use metrics::{corpus_bleu, corpus_rouge_l, RougeMode, ScoredPair};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("need at least 2 records to split, got {0}")]
    TooFewRecords(usize),
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("empty {0} side")]
    EmptySide(&'static str),
    #[error("prediction ids do not match references: {0}")]
    IdMismatch(String),
    #[error("predictions line {line}: {reason}")]
    Predictions { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Record-level split. The train side receives `round(f * N)` records
/// (halves round up); both sides keep the input order.
pub fn split(
    records: &[QuestionRecord],
    cfg: SplitConfig,
) -> Result<(Vec<QuestionRecord>, Vec<QuestionRecord>), EvalError> {
    let n = records.len();
    if n < 2 {
        return Err(EvalError::TooFewRecords(n));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(EvalError::BadFraction(cfg.train_fraction));
    }
    let n_train = round_half_up(cfg.train_fraction * n as f64);
    if n_train == 0 {
        return Err(EvalError::EmptySide("train"));
    }
    if n_train >= n {
        return Err(EvalError::EmptySide("test"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = records.iter().cloned().zip(in_train).partition(|(_, t)| *t);
    Ok((
        train.into_iter().map(|(r, _)| r).collect(),
        test.into_iter().map(|(r, _)| r).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuestionSet {
    Q1,
    Q3,
    Q5,
}

impl QuestionSet {
    pub fn keep(self) -> usize {
        match self {
            QuestionSet::Q1 => 1,
            QuestionSet::Q3 => GENERATED_PER_RECORD,
            QuestionSet::Q5 => QUESTIONS_PER_RECORD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum Reduction {
    SentenceFraction(f64),
    QuestionSet(QuestionSet),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub mode: Reduction,
    pub seed: u64,
}

/// Reduced training set. A sentence fraction samples whole records (N/A
/// ones included) and keeps them in input order; a question set keeps
/// every record and trims question lists.
pub fn reduce(train: &[QuestionRecord], cfg: ReductionConfig) -> Result<Vec<QuestionRecord>, EvalError> {
    match cfg.mode {
        Reduction::SentenceFraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(EvalError::BadFraction(f));
            }
            let k = round_half_up(f * train.len() as f64).min(train.len());
            let mut picked = sample(&mut ChaCha8Rng::seed_from_u64(cfg.seed), train.len(), k).into_vec();
            picked.sort_unstable();
            Ok(picked.into_iter().map(|i| train[i].clone()).collect())
        }
        Reduction::QuestionSet(set) => Ok(train
            .iter()
            .map(|r| match &r.label {
                RecordLabel::NotApplicable => r.clone(),
                RecordLabel::Questions(q) => QuestionRecord {
                    label: RecordLabel::Questions(q.iter().take(set.keep()).cloned().collect()),
                    ..r.clone()
                },
            })
            .collect()),
    }
}

/// A generator's answer for one record: a question text, or `None` for
/// N/A.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub question: Option<String>,
}

impl Prediction {
    pub fn na(id: &str) -> Self {
        Prediction {
            id: id.to_string(),
            question: None,
        }
    }

    pub fn question(id: &str, text: &str) -> Self {
        Prediction {
            id: id.to_string(),
            question: Some(text.to_string()),
        }
    }
}

impl From<&GeneratedRecord> for Prediction {
    fn from(g: &GeneratedRecord) -> Self {
        Prediction {
            id: g.id.clone(),
            question: (!g.is_na()).then(|| g.label.clone()),
        }
    }
}

/// Reads a predictions file: one JSON object per line with `id` and
/// `label` (`"N/A"` or question text). Items that failed generation carry
/// an `error` and count as an empty question.
pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<Prediction>, EvalError> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: GeneratedRecord = serde_json::from_str(&line).map_err(|e| EvalError::Predictions {
            line: n + 1,
            reason: e.to_string(),
        })?;
        out.push(Prediction::from(&rec));
    }
    Ok(out)
}

fn align<'a>(
    predictions: &'a [Prediction],
    references: &'a [QuestionRecord],
) -> Result<Vec<(&'a Prediction, &'a QuestionRecord)>, EvalError> {
    let by_id: HashMap<&str, &Prediction> = predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    if by_id.len() != predictions.len() {
        return Err(EvalError::IdMismatch("duplicate prediction id".into()));
    }
    let ref_ids: HashSet<&str> = references.iter().map(|r| r.id.as_str()).collect();
    if let Some(extra) = predictions.iter().find(|p| !ref_ids.contains(p.id.as_str())) {
        return Err(EvalError::IdMismatch(format!("no reference for {:?}", extra.id)));
    }
    references
        .iter()
        .map(|r| {
            by_id
                .get(r.id.as_str())
                .map(|p| (*p, r))
                .ok_or_else(|| EvalError::IdMismatch(format!("no prediction for {:?}", r.id)))
        })
        .collect()
}

/// Fraction of records whose N/A-ness the prediction gets right.
pub fn accuracy(predictions: &[Prediction], references: &[QuestionRecord]) -> Result<f64, EvalError> {
    let pairs = align(predictions, references)?;
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let correct = pairs.iter().filter(|(p, r)| p.question.is_none() == r.is_na()).count();
    Ok(correct as f64 / pairs.len() as f64)
}

/// Pairs where both prediction and reference carry questions.
pub fn scored_pairs(pairs: &[(&Prediction, &QuestionRecord)]) -> Vec<ScoredPair> {
    pairs
        .iter()
        .filter_map(|(p, r)| match (&p.question, &r.label) {
            (Some(q), RecordLabel::Questions(refs)) => Some(ScoredPair::from_text(q, refs)),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub bleu4: f64,
    pub rouge_l: f64,
    pub n_test: usize,
    pub n_na_ref: usize,
    pub n_scored_pairs: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn render(&self) -> String {
        let mut s = format!(
            "Accuracy\t{:.4}\nBLEU-4\t{:.4}\nROUGE-L\t{:.4}\nn_test\t{}\nn_na_ref\t{}\nn_scored_pairs\t{}\n",
            self.accuracy, self.bleu4, self.rouge_l, self.n_test, self.n_na_ref, self.n_scored_pairs
        );
        for w in &self.warnings {
            s.push_str(&format!("warning\t{w}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub rouge_mode: RougeMode,
    pub exec: Execution,
}

pub fn evaluate(
    predictions: &[Prediction],
    references: &[QuestionRecord],
    opts: EvalOptions,
) -> Result<EvalReport, EvalError> {
    let aligned = align(predictions, references)?;
    let accuracy = accuracy(predictions, references)?;
    let pairs = scored_pairs(&aligned);
    let mut warnings = Vec::new();
    let (bleu4, warn) = corpus_bleu(&pairs, opts.exec);
    warnings.extend(warn);
    let rouge_l = corpus_rouge_l(&pairs, opts.rouge_mode, opts.exec);
    let failed = predictions.iter().filter(|p| p.question.as_deref() == Some("")).count();
    if failed > 0 {
        warnings.push(format!("{failed} predictions failed generation and score as empty questions"));
    }
    Ok(EvalReport {
        accuracy,
        bleu4,
        rouge_l,
        n_test: references.len(),
        n_na_ref: references.iter().filter(|r| r.is_na()).count(),
        n_scored_pairs: pairs.len(),
        warnings,
    })
}

/// Predictions that replay each record's first reference question.
pub fn first_reference_predictions(references: &[QuestionRecord]) -> Vec<Prediction> {
    references
        .iter()
        .map(|r| match r.questions().first() {
            Some(q) => Prediction::question(&r.id, q),
            None => Prediction::na(&r.id),
        })
        .collect()
}

/// Table with one row per metric and one column per labelled report.
pub fn render_comparison(reports: &[(String, EvalReport)]) -> String {
    let mut out = String::from("metric");
    for (label, _) in reports {
        out.push('\t');
        out.push_str(label);
    }
    out.push('\n');
    let rows: [(&str, fn(&EvalReport) -> f64); 3] = [
        ("Accuracy", |r| r.accuracy),
        ("BLEU-4", |r| r.bleu4),
        ("ROUGE-L", |r| r.rouge_l),
    ];
    for (name, get) in rows {
        out.push_str(name);
        for (_, r) in reports {
            out.push_str(&format!("\t{:.4}", get(r)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{assemble_record, na_record};

    fn records(n: usize) -> Vec<QuestionRecord> {
        let g: Vec<String> = (0..3).map(|i| format!("would you like item {i}?")).collect();
        let p: Vec<String> = (3..5).map(|i| format!("do you want item {i}?")).collect();
        (0..n)
            .map(|i| {
                if i % 4 == 0 {
                    na_record(&format!("r{i}"), "Bikes", "s")
                } else {
                    assemble_record(&format!("r{i}"), "Bikes", "s", &g, &p).unwrap()
                }
            })
            .collect()
    }

    #[test]
    fn split_sizes() {
        let r = records(1115);
        let (train, test) = split(&r, SplitConfig::default()).unwrap();
        assert_eq!((train.len(), test.len()), (892, 223));
        assert_eq!(split(&r, SplitConfig::default()).unwrap().0, train);
        assert!(matches!(
            split(&records(2), SplitConfig::default()),
            Err(EvalError::EmptySide("test"))
        ));
    }

    #[test]
    fn reductions() {
        let r = records(800);
        let cfg = |mode| ReductionConfig { mode, seed: 3 };
        assert_eq!(reduce(&r, cfg(Reduction::SentenceFraction(0.25))).unwrap().len(), 200);
        let q3 = reduce(&r, cfg(Reduction::QuestionSet(QuestionSet::Q3))).unwrap();
        assert_eq!(q3[1].questions().len(), 3);
        let q1 = reduce(&r, cfg(Reduction::QuestionSet(QuestionSet::Q1))).unwrap();
        assert_eq!(q1[0], r[0]);
        assert_eq!(q1[1].questions(), &r[1].questions()[..1]);
    }

    #[test]
    fn accuracy_examples() {
        let refs = records(4);
        let preds = vec![
            Prediction::na("r0"),
            Prediction::question("r1", "something else entirely?"),
            Prediction::na("r2"),
            Prediction::question("r3", "x?"),
        ];
        assert_eq!(accuracy(&preds, &refs).unwrap(), 0.75);
        assert!(accuracy(&preds[..3], &refs).is_err());
    }

    #[test]
    fn self_consistency() {
        let refs = records(12);
        let report = evaluate(&first_reference_predictions(&refs), &refs, EvalOptions::default()).unwrap();
        assert_eq!((report.accuracy, report.bleu4, report.rouge_l), (1.0, 1.0, 1.0));
        assert_eq!(report.n_scored_pairs, 9);
    }

    #[test]
    fn all_na_predictions() {
        let refs = records(12);
        let preds: Vec<_> = refs.iter().map(|r| Prediction::na(&r.id)).collect();
        let report = evaluate(&preds, &refs, EvalOptions::default()).unwrap();
        assert_eq!(report.accuracy, 3.0 / 12.0);
        assert_eq!(report.n_scored_pairs, 0);
        assert_eq!(report.bleu4, 0.0);
        assert!(!report.warnings.is_empty());
    }
}
