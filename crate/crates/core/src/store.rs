//! TF-IDF question index answering similarity queries.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::corpus::normalize_category;
use crate::eval::metrics::metric_tokens;
use crate::question::{ElicitationQuestion, QuestionFlag};

const FORMAT: &str = "crsq-question-index";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Raw inner product of TF-IDF vectors.
    #[default]
    InnerProduct,
    /// Inner product divided by both vector lengths.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IndexOptions {
    pub include_generic: bool,
    pub weighting: Weighting,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub id: String,
    pub category: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub category: String,
    pub question: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryResult {
    pub ranked: Vec<Hit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cannot build an index from zero questions")]
    Empty,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("index file line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionIndex {
    entries: Vec<StoreEntry>,
    weighting: Weighting,
    /// Term to document frequency.
    vocabulary: BTreeMap<String, u32>,
    /// Term to (entry ordinal, raw term frequency), ordinals ascending.
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    norms: Vec<f64>,
}

fn terms(text: &str) -> Vec<String> {
    metric_tokens(text)
        .into_iter()
        .filter(|t| t.chars().any(char::is_alphanumeric))
        .collect()
}

fn term_counts(text: &str) -> BTreeMap<String, u32> {
    let mut m = BTreeMap::new();
    for t in terms(text) {
        *m.entry(t).or_insert(0) += 1;
    }
    m
}

impl QuestionIndex {
    pub fn build(questions: &[ElicitationQuestion], opts: IndexOptions) -> Result<Self, StoreError> {
        let entries: Vec<StoreEntry> = questions
            .iter()
            .filter(|q| opts.include_generic || !q.has_flag(QuestionFlag::Generic))
            .map(|q| StoreEntry {
                id: crate::question::record_id(&q.review_id, q.sentence_index),
                category: q.category.clone(),
                text: q.text.clone(),
            })
            .collect();
        Self::from_entries(entries, opts.weighting)
    }

    pub fn from_entries(entries: Vec<StoreEntry>, weighting: Weighting) -> Result<Self, StoreError> {
        if entries.is_empty() {
            return Err(StoreError::Empty);
        }
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            for (t, tf) in term_counts(&e.text) {
                postings.entry(t).or_default().push((i as u32, tf));
            }
        }
        let vocabulary = postings.iter().map(|(t, p)| (t.clone(), p.len() as u32)).collect();
        let mut index = QuestionIndex {
            entries,
            weighting,
            vocabulary,
            postings,
            norms: Vec::new(),
        };
        index.compute_norms();
        Ok(index)
    }

    fn compute_norms(&mut self) {
        let mut sq = vec![0.0f64; self.entries.len()];
        for (t, plist) in &self.postings {
            let idf = self.idf(t);
            for &(i, tf) in plist {
                sq[i as usize] += (tf as f64 * idf).powi(2);
            }
        }
        self.norms = sq.into_iter().map(f64::sqrt).collect();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[StoreEntry] {
        &self.entries
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    /// `ln(N / df)`; zero for terms outside the vocabulary.
    pub fn idf(&self, term: &str) -> f64 {
        match self.vocabulary.get(term) {
            Some(&df) if df > 0 => (self.entries.len() as f64 / df as f64).ln(),
            _ => 0.0,
        }
    }

    /// TF-IDF weight of `term` in entry `ordinal`.
    pub fn weight(&self, ordinal: usize, term: &str) -> f64 {
        self.postings
            .get(term)
            .and_then(|p| p.binary_search_by_key(&(ordinal as u32), |&(i, _)| i).ok().map(|k| p[k].1))
            .map_or(0.0, |tf| tf as f64 * self.idf(term))
    }

    /// Top `k` entries by similarity to `text`, optionally restricted to a
    /// category. Zero-score entries are dropped; equal scores keep
    /// insertion order.
    pub fn query(&self, text: &str, category: Option<&str>, k: usize) -> Result<QueryResult, StoreError> {
        if k == 0 {
            return Err(StoreError::ZeroK);
        }
        let wanted = category.map(normalize_category);
        if let Some(w) = &wanted {
            if !self.entries.iter().any(|e| normalize_category(&e.category) == *w) {
                return Ok(QueryResult {
                    ranked: Vec::new(),
                    notice: Some(format!("unknown category {:?}", category.unwrap_or_default())),
                });
            }
        }
        let allowed: Option<Vec<bool>> = wanted.map(|w| {
            self.entries
                .iter()
                .map(|e| normalize_category(&e.category) == w)
                .collect()
        });
        let mut scores: HashMap<u32, f64> = HashMap::new();
        let mut q_sq = 0.0;
        for (t, qtf) in term_counts(text) {
            let idf = self.idf(&t);
            let qw = qtf as f64 * idf;
            q_sq += qw * qw;
            if qw == 0.0 {
                continue;
            }
            for &(i, tf) in self.postings.get(&t).map_or(&[][..], Vec::as_slice) {
                if allowed.as_ref().is_none_or(|a| a[i as usize]) {
                    *scores.entry(i).or_insert(0.0) += qw * tf as f64 * idf;
                }
            }
        }
        let q_norm = q_sq.sqrt();
        let mut ranked: Vec<(u32, f64)> = scores
            .into_iter()
            .map(|(i, s)| match self.weighting {
                Weighting::InnerProduct => (i, s),
                Weighting::Cosine => (i, s / (q_norm * self.norms[i as usize])),
            })
            .filter(|&(_, s)| s > 0.0)
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        Ok(QueryResult {
            ranked: ranked
                .into_iter()
                .map(|(i, score)| {
                    let e = &self.entries[i as usize];
                    Hit {
                        id: e.id.clone(),
                        category: e.category.clone(),
                        question: e.text.clone(),
                        score,
                    }
                })
                .collect(),
            notice: None,
        })
    }

    /// Writes the index: a versioned header, then entry, vocabulary and
    /// postings blocks, each introduced by its name and line count.
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        let weighting = serde_json::to_string(&self.weighting)?;
        writeln!(w, "{FORMAT} {VERSION}")?;
        writeln!(w, "weighting {}", weighting.trim_matches('"'))?;
        writeln!(w, "entries {}", self.entries.len())?;
        for e in &self.entries {
            writeln!(w, "{}", serde_json::to_string(e)?)?;
        }
        writeln!(w, "vocabulary {}", self.vocabulary.len())?;
        for (t, df) in &self.vocabulary {
            writeln!(w, "{t}\t{df}")?;
        }
        writeln!(w, "postings {}", self.postings.len())?;
        for (t, plist) in &self.postings {
            write!(w, "{t}\t")?;
            for (k, (i, tf)) in plist.iter().enumerate() {
                if k > 0 {
                    w.write_all(b" ")?;
                }
                write!(w, "{i}:{tf}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self, StoreError> {
        let mut lines = reader.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String), StoreError> {
            match lines.next() {
                Some((n, l)) => Ok((n + 1, l?)),
                None => Err(StoreError::Format {
                    line: 0,
                    reason: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let bad = |line: usize, reason: String| StoreError::Format { line, reason };
        let (n, header) = next("header")?;
        if header != format!("{FORMAT} {VERSION}") {
            return Err(bad(n, format!("unsupported header {header:?}")));
        }
        let block = |line: (usize, String), name: &str| -> Result<usize, StoreError> {
            line.1
                .strip_prefix(name)
                .and_then(|r| r.trim().parse().ok())
                .ok_or_else(|| bad(line.0, format!("expected {name} <count>")))
        };
        let (n, wline) = next("weighting")?;
        let weighting: Weighting = wline
            .strip_prefix("weighting ")
            .and_then(|w| serde_json::from_str(&format!("\"{w}\"")).ok())
            .ok_or_else(|| bad(n, "expected weighting".into()))?;
        let count = block(next("entries")?, "entries")?;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = next("entry")?;
            entries.push(serde_json::from_str(&l).map_err(|e| bad(n, e.to_string()))?);
        }
        let count = block(next("vocabulary")?, "vocabulary")?;
        let mut vocabulary = BTreeMap::new();
        for _ in 0..count {
            let (n, l) = next("vocabulary entry")?;
            let (t, df) = l.split_once('\t').ok_or_else(|| bad(n, "expected term<TAB>df".into()))?;
            vocabulary.insert(t.to_string(), df.parse().map_err(|_| bad(n, "bad df".into()))?);
        }
        let count = block(next("postings")?, "postings")?;
        let mut postings = BTreeMap::new();
        for _ in 0..count {
            let (n, l) = next("postings list")?;
            let (t, list) = l.split_once('\t').ok_or_else(|| bad(n, "expected term<TAB>postings".into()))?;
            let plist = list
                .split(' ')
                .map(|p| {
                    let (i, tf) = p.split_once(':')?;
                    Some((i.parse().ok()?, tf.parse().ok()?))
                })
                .collect::<Option<Vec<(u32, u32)>>>()
                .ok_or_else(|| bad(n, "bad posting".into()))?;
            if plist.iter().any(|&(i, _)| i as usize >= entries.len()) {
                return Err(bad(n, "posting refers to a missing entry".into()));
            }
            postings.insert(t.to_string(), plist);
        }
        let mut index = QuestionIndex {
            entries,
            weighting,
            vocabulary,
            postings,
            norms: Vec::new(),
        };
        index.compute_norms();
        Ok(index)
    }
}

/// An index that readers share and a rebuild replaces atomically.
#[derive(Debug, Clone)]
pub struct SharedIndex(Arc<RwLock<Arc<QuestionIndex>>>);

impl SharedIndex {
    pub fn new(index: QuestionIndex) -> Self {
        SharedIndex(Arc::new(RwLock::new(Arc::new(index))))
    }

    pub fn current(&self) -> Arc<QuestionIndex> {
        self.0.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn swap(&self, index: QuestionIndex) {
        *self.0.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(index);
    }
}
