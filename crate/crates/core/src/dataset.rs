//! Sentence-question dataset: records, TSV format, statistics and the
//! crowdsourcing aggregation rules.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::question::NA;

pub const QUESTIONS_PER_RECORD: usize = 5;
pub const GENERATED_PER_RECORD: usize = 3;
pub const PARAPHRASES_PER_RECORD: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordLabel {
    NotApplicable,
    Questions(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub category: String,
    pub sentence: String,
    pub label: RecordLabel,
}

impl QuestionRecord {
    pub fn is_na(&self) -> bool {
        self.label == RecordLabel::NotApplicable
    }

    pub fn questions(&self) -> &[String] {
        match &self.label {
            RecordLabel::NotApplicable => &[],
            RecordLabel::Questions(q) => q,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] io::Error),
    #[error("dataset has no records")]
    Empty,
    #[error("dataset header lacks a {0:?} column")]
    MissingColumn(&'static str),
    #[error("record {record}: field {field}: {reason}")]
    Schema {
        record: String,
        field: String,
        reason: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// How many questions an applicable record must carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtMost(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub total: usize,
    pub na: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: usize,
    pub na: usize,
    pub applicable: usize,
    pub na_fraction: f64,
    pub questions: usize,
    pub per_category: BTreeMap<String, CategoryStats>,
}

impl DatasetStats {
    pub fn of(records: &[QuestionRecord]) -> Self {
        let mut s = DatasetStats::default();
        for r in records {
            let c = s.per_category.entry(r.category.clone()).or_default();
            c.total += 1;
            s.total += 1;
            if r.is_na() {
                c.na += 1;
                s.na += 1;
            } else {
                s.applicable += 1;
                s.questions += r.questions().len();
            }
        }
        if s.total > 0 {
            s.na_fraction = s.na as f64 / s.total as f64;
        }
        s
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "records\t{}\napplicable\t{}\nn/a\t{} ({:.1}%)\nquestions\t{}\n\ncategory\trecords\tn/a\n",
            self.total,
            self.applicable,
            self.na,
            self.na_fraction * 100.0,
            self.questions
        );
        for (name, c) in &self.per_category {
            out.push_str(&format!("{name}\t{}\t{}\n", c.total, c.na));
        }
        out
    }
}

struct Columns {
    id: Option<usize>,
    category: usize,
    sentence: usize,
    label: Option<usize>,
    questions: Vec<usize>,
}

fn question_column(name: &str) -> Option<usize> {
    let rest = name
        .strip_prefix("question")
        .or_else(|| name.strip_prefix('q'))?
        .trim_start_matches(['_', ' ']);
    rest.parse().ok()
}

impl Columns {
    fn detect(header: &csv::StringRecord) -> Result<Self, DatasetError> {
        let names: Vec<String> = header.iter().map(|h| h.trim().to_lowercase()).collect();
        let find = |aliases: &[&str]| names.iter().position(|n| aliases.contains(&n.as_str()));
        let mut numbered: Vec<(usize, usize)> = names
            .iter()
            .enumerate()
            .filter_map(|(i, n)| question_column(n).map(|k| (k, i)))
            .collect();
        numbered.sort();
        Ok(Columns {
            id: find(&["id", "record_id", "sentence_id"]),
            category: find(&["category", "cat"]).ok_or(DatasetError::MissingColumn("category"))?,
            sentence: find(&["sentence", "text", "review_sentence", "candidate_sentence"])
                .ok_or(DatasetError::MissingColumn("sentence"))?,
            label: find(&["label"]),
            questions: numbered.into_iter().map(|(_, i)| i).collect(),
        })
    }
}

fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Reads records from dataset text. The header selects the columns, so
/// both this crate's TSV and comma-separated exports with `sentence`,
/// `category` and numbered question columns are accepted.
pub fn parse_dataset(text: &str, arity: Arity) -> Result<Vec<QuestionRecord>, DatasetError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(text))
        .flexible(true)
        .from_reader(text.as_bytes());
    let cols = Columns::detect(reader.headers()?)?;
    let mut records = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        if row.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let get = |i: usize| row.get(i).unwrap_or("").trim();
        let id = match cols.id {
            Some(i) if !get(i).is_empty() => get(i).to_string(),
            _ => format!("{:05}", n + 1),
        };
        let schema = |field: &str, reason: String| DatasetError::Schema {
            record: id.clone(),
            field: field.to_string(),
            reason,
        };
        let category = get(cols.category);
        if category.is_empty() {
            return Err(schema("category", "empty".into()));
        }
        let sentence = get(cols.sentence);
        if sentence.is_empty() {
            return Err(schema("sentence", "empty".into()));
        }
        let questions: Vec<&str> = cols.questions.iter().map(|&i| get(i)).filter(|q| !q.is_empty()).collect();
        let na = match cols.label.map(get) {
            Some(l) if l.eq_ignore_ascii_case(NA) => true,
            Some(l) if l.is_empty() || l.eq_ignore_ascii_case("questions") => false,
            Some(l) => return Err(schema("label", format!("unknown label {l:?}"))),
            None => questions.is_empty() || questions == [NA],
        };
        let label = if na {
            if cols.label.is_some() && !questions.is_empty() {
                return Err(schema("q1", "N/A record carries questions".into()));
            }
            RecordLabel::NotApplicable
        } else {
            let ok = match arity {
                Arity::Exactly(k) => questions.len() == k,
                Arity::AtMost(k) => (1..=k).contains(&questions.len()),
            };
            if !ok {
                return Err(schema("questions", format!("found {} questions", questions.len())));
            }
            for (k, q) in questions.iter().enumerate() {
                if !q.ends_with('?') {
                    return Err(schema(&format!("q{}", k + 1), "question does not end with '?'".into()));
                }
            }
            RecordLabel::Questions(questions.iter().map(|q| q.to_string()).collect())
        };
        records.push(QuestionRecord {
            id,
            category: category.to_string(),
            sentence: sentence.to_string(),
            label,
        });
    }
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(records)
}

pub fn read_dataset(path: &Path, arity: Arity) -> Result<Vec<QuestionRecord>, DatasetError> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    parse_dataset(&text, arity)
}

/// Loads a released-format dataset: every applicable record carries
/// exactly five questions.
pub fn load_dataset(path: &Path) -> Result<(Vec<QuestionRecord>, DatasetStats), DatasetError> {
    let records = read_dataset(path, Arity::Exactly(QUESTIONS_PER_RECORD))?;
    let stats = DatasetStats::of(&records);
    Ok((records, stats))
}

/// Writes records as TSV with header `id category sentence label q1..q5`.
pub fn write_dataset<W: Write>(records: &[QuestionRecord], out: W) -> Result<(), DatasetError> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    let mut header = vec!["id".to_string(), "category".into(), "sentence".into(), "label".into()];
    header.extend((1..=QUESTIONS_PER_RECORD).map(|k| format!("q{k}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.id.as_str(), r.category.as_str(), r.sentence.as_str()];
        row.push(if r.is_na() { NA } else { "QUESTIONS" });
        let qs = r.questions();
        for k in 0..QUESTIONS_PER_RECORD {
            row.push(qs.get(k).map_or("", String::as_str));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn dataset_to_string(records: &[QuestionRecord]) -> String {
    let mut buf = Vec::new();
    write_dataset(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 input")
}

/// Step 1 answer of one worker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WriteResponse {
    Question(String),
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step1Outcome {
    Accepted(Vec<String>),
    NotApplicable,
    Rerun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Asker {
    Buyer,
    Salesperson,
    Neither,
}

/// Step 2 answers of one worker about one question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub grammatical: bool,
    pub yesno_answerable: bool,
    pub mentions_usage: bool,
    pub asker: Asker,
}

impl ValidationVerdict {
    pub const VALID: ValidationVerdict = ValidationVerdict {
        grammatical: true,
        yesno_answerable: true,
        mentions_usage: true,
        asker: Asker::Salesperson,
    };

    /// Per aspect, whether this verdict finds the question invalid.
    pub fn invalid_aspects(&self) -> [bool; 4] {
        [
            !self.grammatical,
            !self.yesno_answerable,
            !self.mentions_usage,
            self.asker != Asker::Salesperson,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step2Outcome {
    Approved,
    Rejected,
    ExpertReview,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AggregationError {
    #[error("expected {expected} responses, got {got}")]
    Arity { expected: usize, got: usize },
}

fn check_arity(expected: usize, got: usize) -> Result<(), AggregationError> {
    if expected == got {
        Ok(())
    } else {
        Err(AggregationError::Arity { expected, got })
    }
}

/// Two or more N/A answers make the sentence N/A, a single one re-runs the
/// task, none accepts the three questions.
pub fn aggregate_step1(responses: &[WriteResponse]) -> Result<Step1Outcome, AggregationError> {
    check_arity(GENERATED_PER_RECORD, responses.len())?;
    let na = responses.iter().filter(|r| **r == WriteResponse::NotApplicable).count();
    Ok(match na {
        0 => Step1Outcome::Accepted(
            responses
                .iter()
                .filter_map(|r| match r {
                    WriteResponse::Question(q) => Some(q.clone()),
                    WriteResponse::NotApplicable => None,
                })
                .collect(),
        ),
        1 => Step1Outcome::Rerun,
        _ => Step1Outcome::NotApplicable,
    })
}

/// Rejects a question found invalid on one aspect by all three workers or
/// on two aspects by at least two workers each. Otherwise a question with
/// two or more distinct aspects marked invalid goes to an expert.
pub fn aggregate_step2(verdicts: &[ValidationVerdict]) -> Result<Step2Outcome, AggregationError> {
    check_arity(GENERATED_PER_RECORD, verdicts.len())?;
    let mut counts = [0usize; 4];
    for v in verdicts {
        for (c, bad) in counts.iter_mut().zip(v.invalid_aspects()) {
            *c += usize::from(bad);
        }
    }
    let unanimous = counts.iter().any(|&c| c == verdicts.len());
    let majority = counts.iter().filter(|&&c| c >= 2).count();
    let flagged = counts.iter().filter(|&&c| c >= 1).count();
    Ok(if unanimous || majority >= 2 {
        Step2Outcome::Rejected
    } else if flagged >= 2 {
        Step2Outcome::ExpertReview
    } else {
        Step2Outcome::Approved
    })
}

/// Builds an applicable record from its three generated questions and two
/// paraphrases.
pub fn assemble_record(
    id: &str,
    category: &str,
    sentence: &str,
    generated: &[String],
    paraphrases: &[String],
) -> Result<QuestionRecord, AggregationError> {
    check_arity(GENERATED_PER_RECORD, generated.len())?;
    check_arity(PARAPHRASES_PER_RECORD, paraphrases.len())?;
    Ok(QuestionRecord {
        id: id.to_string(),
        category: category.to_string(),
        sentence: sentence.to_string(),
        label: RecordLabel::Questions(generated.iter().chain(paraphrases).cloned().collect()),
    })
}

pub fn na_record(id: &str, category: &str, sentence: &str) -> QuestionRecord {
    QuestionRecord {
        id: id.to_string(),
        category: category.to_string(),
        sentence: sentence.to_string(),
        label: RecordLabel::NotApplicable,
    }
}
