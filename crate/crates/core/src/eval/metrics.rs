//! Corpus BLEU-4 and ROUGE-L over multi-reference question sets.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::text::tokenize;

pub const MAX_ORDER: usize = 4;

/// Lowercased tokens with punctuation split off.
pub fn metric_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.lower).collect()
}

/// A hypothesis with its references, already tokenized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoredPair {
    pub hypothesis: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl ScoredPair {
    pub fn from_text<S: AsRef<str>>(hypothesis: &str, references: &[S]) -> Self {
        ScoredPair {
            hypothesis: metric_tokens(hypothesis),
            references: references.iter().map(|r| metric_tokens(r.as_ref())).collect(),
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Per-pair BLEU statistics: clipped matches and totals for each order,
/// hypothesis length and closest reference length.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn of(pair: &ScoredPair) -> Self {
        let hyp = &pair.hypothesis;
        let mut s = BleuStats {
            hyp_len: hyp.len(),
            ref_len: closest_ref_len(hyp.len(), &pair.references),
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let counts = ngram_counts(hyp, n);
            let mut max_ref: HashMap<&[String], usize> = HashMap::new();
            for r in &pair.references {
                for (g, c) in ngram_counts(r, n) {
                    let e = max_ref.entry(g).or_insert(0);
                    *e = (*e).max(c);
                }
            }
            s.matches[n - 1] = counts
                .iter()
                .map(|(g, &c)| c.min(max_ref.get(g).copied().unwrap_or(0)))
                .sum();
            s.totals[n - 1] = hyp.len().saturating_sub(n - 1);
        }
        s
    }

    pub fn merge(mut self, o: BleuStats) -> Self {
        for n in 0..MAX_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
        self
    }

    /// Corpus BLEU from accumulated statistics, or `None` when some
    /// n-gram precision is zero.
    pub fn score(&self) -> Option<f64> {
        if self.matches.iter().any(|&m| m == 0) {
            return None;
        }
        let log_p: f64 = (0..MAX_ORDER)
            .map(|n| (self.matches[n] as f64 / self.totals[n] as f64).ln())
            .sum::<f64>()
            / MAX_ORDER as f64;
        let (c, r) = (self.hyp_len as f64, self.ref_len as f64);
        let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
        Some(bp * log_p.exp())
    }
}

/// Reference length closest to `hyp_len`, the shorter one on ties.
pub fn closest_ref_len(hyp_len: usize, references: &[Vec<String>]) -> usize {
    references
        .iter()
        .map(Vec::len)
        .min_by_key(|&l| (l.abs_diff(hyp_len), l))
        .unwrap_or(0)
}

/// Corpus-level BLEU-4 without smoothing. Returns 0 and a warning when a
/// precision is zero or there is nothing to score.
pub fn corpus_bleu(pairs: &[ScoredPair], exec: Execution) -> (f64, Option<String>) {
    if pairs.is_empty() {
        return (0.0, Some("no scored pairs; BLEU-4 reported as 0".into()));
    }
    let stats = exec.fold_reduce(
        pairs,
        BleuStats::default,
        |acc, p| acc.merge(BleuStats::of(p)),
        BleuStats::merge,
    );
    match stats.score() {
        Some(s) => (s, None),
        None => (0.0, Some("an n-gram precision is zero; BLEU-4 reported as 0".into())),
    }
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RougeMode {
    #[default]
    F1,
    Recall,
}

/// ROUGE-L of one hypothesis: best score over its references.
pub fn rouge_l_pair(pair: &ScoredPair, mode: RougeMode) -> f64 {
    let h = &pair.hypothesis;
    pair.references
        .iter()
        .map(|r| {
            let l = lcs_len(h, r) as f64;
            if l == 0.0 {
                return 0.0;
            }
            let (p, rec) = (l / h.len() as f64, l / r.len() as f64);
            match mode {
                RougeMode::F1 => 2.0 * p * rec / (p + rec),
                RougeMode::Recall => rec,
            }
        })
        .fold(0.0, f64::max)
}

/// Mean per-pair ROUGE-L.
pub fn corpus_rouge_l(pairs: &[ScoredPair], mode: RougeMode, exec: Execution) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let sum: f64 = exec.map(pairs, |p| rouge_l_pair(p, mode)).into_iter().sum();
    sum / pairs.len() as f64
}
