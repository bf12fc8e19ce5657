//! Aspect lexicon mining and aspect-value pair extraction.
//!
//! An aspect is a noun that reviewers describe with adjectives, either
//! directly ("fat tires") or through a copula ("the seat is comfortable").

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::text::{Pos, Sentence, Token};

pub const DEFAULT_MIN_SUPPORT: u64 = 3;

/// Nouns that never count as aspects.
pub const STOPWORD_NOUNS: &[&str] = &[
    "thing", "stuff", "lot", "bit", "way", "time", "one", "ones", "product", "item", "day", "year",
    "month", "week", "hour", "minute", "everything", "something", "anything", "nothing", "people",
    "kind", "sort", "type", "lots", "deal", "part", "side", "end", "job", "review", "star", "amazon",
];

const COPULAS: &[&str] = &["is", "are", "was", "were"];
const WINDOW: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PairPattern {
    AdjNoun,
    NounCopulaAdj,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectValuePair {
    pub aspect: String,
    pub value: String,
    pub review_id: String,
    pub sentence_index: u32,
    pub pattern: PairPattern,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AspectLexicon {
    pub category: String,
    aspects: BTreeMap<String, u64>,
}

/// Lowercase singular form of a noun token. Plural-tagged tokens lose
/// their plural suffix; singular tokens are kept as they are.
pub fn normalize_noun(token: &Token) -> String {
    if token.pos != Pos::Nns {
        return token.lower.clone();
    }
    singularize(&token.lower)
}

fn singularize(w: &str) -> String {
    if let Some(stem) = w.strip_suffix("ies") {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    for suffix in ["ches", "shes", "sses", "xes", "zzes"] {
        if w.ends_with(suffix) {
            return w[..w.len() - 2].to_string();
        }
    }
    match w.strip_suffix('s') {
        Some(stem) if stem.len() >= 2 && !stem.ends_with('s') => stem.to_string(),
        _ => w.to_string(),
    }
}

fn is_stopword_noun(normalized: &str) -> bool {
    STOPWORD_NOUNS.contains(&normalized)
}

/// Adjective reached from the noun at `i` through a copula: the copula
/// lies within `WINDOW` tokens after the noun, the adjective within
/// `WINDOW` tokens after the copula, and only adverbs sit in between.
fn copula_adjective(toks: &[Token], i: usize) -> Option<usize> {
    let mut c = i + 1;
    while c < toks.len() && c <= i + WINDOW {
        if COPULAS.contains(&toks[c].lower.as_str()) {
            let mut a = c + 1;
            while a < toks.len() && a <= c + WINDOW {
                if toks[a].pos.is_adjective() {
                    return Some(a);
                }
                if toks[a].pos != Pos::Rb {
                    return None;
                }
                a += 1;
            }
            return None;
        }
        if toks[c].pos != Pos::Rb {
            return None;
        }
        c += 1;
    }
    None
}

/// The adjective describing the noun at `i`, if any. The attributive
/// pattern takes precedence over the copular one, so a noun yields at most
/// one value.
fn describing_adjective(toks: &[Token], i: usize) -> Option<(usize, PairPattern)> {
    if !toks[i].pos.is_common_noun() {
        return None;
    }
    if i > 0 && toks[i - 1].pos.is_adjective() {
        return Some((i - 1, PairPattern::AdjNoun));
    }
    copula_adjective(toks, i).map(|a| (a, PairPattern::NounCopulaAdj))
}

/// Normalized nouns of a sentence that occur in an aspect context.
pub fn aspect_contexts(sentence: &Sentence) -> impl Iterator<Item = String> + '_ {
    let toks = &sentence.tokens;
    (0..toks.len())
        .filter(|&i| describing_adjective(toks, i).is_some())
        .map(|i| normalize_noun(&toks[i]))
        .filter(|n| !is_stopword_noun(n))
}

/// Counts aspect contexts per noun over `sentences`.
pub fn count_aspects(sentences: &[Sentence], exec: Execution) -> HashMap<String, u64> {
    exec.fold_reduce(
        sentences,
        HashMap::new,
        |mut acc: HashMap<String, u64>, s| {
            for noun in aspect_contexts(s) {
                *acc.entry(noun).or_default() += 1;
            }
            acc
        },
        |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        },
    )
}

/// Mines the aspect lexicon of one category: nouns seen at least
/// `min_support` times next to an adjective or linked to one by a copula.
pub fn mine_aspect_lexicon(
    category: &str,
    sentences: &[Sentence],
    min_support: u64,
    exec: Execution,
) -> AspectLexicon {
    AspectLexicon::from_counts(category, count_aspects(sentences, exec), min_support)
}

/// Extracts the aspect-value pairs of `sentence` whose aspect is in the
/// lexicon.
pub fn extract_pairs(sentence: &Sentence, lexicon: &AspectLexicon) -> Vec<AspectValuePair> {
    let toks = &sentence.tokens;
    (0..toks.len())
        .filter_map(|i| {
            let (a, pattern) = describing_adjective(toks, i)?;
            let aspect = normalize_noun(&toks[i]);
            lexicon.contains(&aspect).then(|| AspectValuePair {
                aspect,
                value: toks[a].lower.clone(),
                review_id: sentence.source_review_id.clone(),
                sentence_index: sentence.index_in_review,
                pattern,
            })
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl AspectLexicon {
    pub fn new(category: impl Into<String>) -> Self {
        AspectLexicon {
            category: category.into(),
            aspects: BTreeMap::new(),
        }
    }

    pub fn from_counts<I: IntoIterator<Item = (String, u64)>>(
        category: &str,
        counts: I,
        min_support: u64,
    ) -> Self {
        let min_support = min_support.max(1);
        AspectLexicon {
            category: category.to_string(),
            aspects: counts.into_iter().filter(|&(_, c)| c >= min_support).collect(),
        }
    }

    pub fn insert(&mut self, aspect: impl Into<String>, support: u64) {
        self.aspects.insert(aspect.into(), support);
    }

    pub fn contains(&self, aspect: &str) -> bool {
        self.aspects.contains_key(aspect)
    }

    pub fn support(&self, aspect: &str) -> Option<u64> {
        self.aspects.get(aspect).copied()
    }

    pub fn len(&self) -> usize {
        self.aspects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aspects.is_empty()
    }

    /// Aspects sorted by support, highest first, ties alphabetically.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<_> = self.aspects.iter().map(|(k, &c)| (k.as_str(), c)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }

    /// `# category: <name>` followed by `aspect<TAB>support` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.category.is_empty() {
            let _ = writeln!(out, "# category: {}", self.category);
        }
        for (a, c) in self.ranked() {
            let _ = writeln!(out, "{a}\t{c}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = AspectLexicon::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(name) = rest.trim().strip_prefix("category:") {
                    lex.category = name.trim().to_string();
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: &str| LexiconError::Parse {
                line: n + 1,
                reason: reason.to_string(),
            };
            let (aspect, support) = line.split_once('\t').ok_or_else(|| err("expected aspect<TAB>support"))?;
            let support = support.trim().parse().map_err(|_| err("support is not an integer"))?;
            lex.aspects.insert(aspect.trim().to_lowercase(), support);
        }
        Ok(lex)
    }
}
