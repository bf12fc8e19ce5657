//! Activity detection and candidate sentence selection.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aspect::{extract_pairs, AspectLexicon, AspectValuePair};
use crate::exec::Execution;
use crate::text::{Pos, Sentence, Token};

/// "for" followed immediately by a progressive verb.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityMention {
    pub prep_index: usize,
    pub verb_index: usize,
    pub clause_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSentence {
    pub sentence: Sentence,
    pub category: String,
    pub aspect_values: Vec<AspectValuePair>,
    pub activities: Vec<ActivityMention>,
}

fn is_for(t: &Token) -> bool {
    t.lower == "for" && t.pos == Pos::In
}

/// Text from `start` to the end of the sentence, without trailing
/// punctuation.
fn clause_from(sentence: &Sentence, start: usize) -> String {
    let toks = &sentence.tokens;
    let last = toks[start..]
        .iter()
        .rposition(|t| t.surface.chars().any(char::is_alphanumeric))
        .map_or(start, |p| start + p);
    sentence.text[toks[start].offset..toks[last].end()].to_string()
}

pub fn detect_activity(sentence: &Sentence) -> Vec<ActivityMention> {
    let toks = &sentence.tokens;
    toks.windows(2)
        .enumerate()
        .filter(|(_, w)| is_for(&w[0]) && w[1].pos == Pos::Vbg)
        .map(|(i, _)| ActivityMention {
            prep_index: i,
            verb_index: i + 1,
            clause_text: clause_from(sentence, i),
        })
        .collect()
}

/// Candidate for `sentence` if it mentions an activity and, when
/// `require_aspect` is set, an aspect-value pair.
pub fn candidate(
    sentence: &Sentence,
    category: &str,
    lexicon: &AspectLexicon,
    require_aspect: bool,
) -> Option<CandidateSentence> {
    let activities = detect_activity(sentence);
    if activities.is_empty() {
        return None;
    }
    let aspect_values = extract_pairs(sentence, lexicon);
    if require_aspect && aspect_values.is_empty() {
        return None;
    }
    Some(CandidateSentence {
        sentence: sentence.clone(),
        category: category.to_string(),
        aspect_values,
        activities,
    })
}

/// Candidates among `sentences`, in input order.
pub fn select_candidates(
    sentences: &[Sentence],
    category: &str,
    lexicon: &AspectLexicon,
    require_aspect: bool,
    exec: Execution,
) -> Vec<CandidateSentence> {
    exec.map(sentences, |s| candidate(s, category, lexicon, require_aspect))
        .into_iter()
        .flatten()
        .collect()
}

/// Uniform sample of `min(n, len)` candidates without replacement. The
/// input is first sorted by stable sentence id so the result depends only
/// on the set of candidates and the seed.
pub fn sample_per_category(mut candidates: Vec<CandidateRecord>, n: usize, seed: u64) -> Vec<CandidateRecord> {
    candidates.sort_by(|a, b| {
        (a.review_id.as_str(), a.sentence_index).cmp(&(b.review_id.as_str(), b.sentence_index))
    });
    if n >= candidates.len() {
        return candidates;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, candidates.len(), n).into_vec();
    picked.sort_unstable();
    let mut slots: Vec<Option<CandidateRecord>> = candidates.into_iter().map(Some).collect();
    picked.into_iter().filter_map(|i| slots[i].take()).collect()
}

/// Line-delimited serialized form of a candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub category: String,
    pub review_id: String,
    pub sentence_index: u32,
    pub text: String,
    pub clause_texts: Vec<String>,
}

impl From<&CandidateSentence> for CandidateRecord {
    fn from(c: &CandidateSentence) -> Self {
        CandidateRecord {
            category: c.category.clone(),
            review_id: c.sentence.source_review_id.clone(),
            sentence_index: c.sentence.index_in_review,
            text: c.sentence.text.clone(),
            clause_texts: c.activities.iter().map(|a| a.clause_text.clone()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::RuleTagger;

    fn sentence(text: &str) -> Sentence {
        Sentence::analyze("r", 0, text, &RuleTagger::default())
    }

    fn clauses(text: &str) -> Vec<String> {
        detect_activity(&sentence(text)).into_iter().map(|m| m.clause_text).collect()
    }

    #[test]
    fn detects_usage_clauses() {
        assert_eq!(
            clauses("Great for making smoothies with frozen fruit."),
            ["for making smoothies with frozen fruit"]
        );
        assert_eq!(
            clauses("The fat tires are perfect for conquering tough terrain."),
            ["for conquering tough terrain"]
        );
        assert!(clauses("I bought this for my mother.").is_empty());
        assert!(clauses("Perfect for the morning commute.").is_empty());
        assert!(clauses("Perfect for morning rides.").is_empty());
    }

    #[test]
    fn mention_indices() {
        let m = &detect_activity(&sentence("Good for hiking and for biking!"))[..];
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].prep_index, m[0].verb_index), (1, 2));
        assert_eq!(m[1].clause_text, "for biking");
    }

    #[test]
    fn aspect_requirement() {
        let s = sentence("Great for making smoothies with frozen fruit.");
        let lex = AspectLexicon::new("Blenders");
        assert!(candidate(&s, "Blenders", &lex, true).is_none());
        assert!(candidate(&s, "Blenders", &lex, false).is_some());
    }

    fn records(n: usize) -> Vec<CandidateRecord> {
        (0..n)
            .map(|i| CandidateRecord {
                category: "Bikes".into(),
                review_id: format!("r{i:04}"),
                sentence_index: 0,
                text: format!("s{i}"),
                clause_texts: vec![],
            })
            .collect()
    }

    #[test]
    fn sampling_is_deterministic_and_bounded() {
        let a = sample_per_category(records(1000), 100, 7);
        assert_eq!(a.len(), 100);
        assert_eq!(a, sample_per_category(records(1000), 100, 7));
        assert_eq!(sample_per_category(records(15), 100, 7).len(), 15);
    }

    #[test]
    fn every_candidate_reachable_over_seeds() {
        let mut seen = [false; 3];
        for seed in 0..100 {
            let s = sample_per_category(records(3), 1, seed);
            let i: usize = s[0].text[1..].parse().unwrap();
            seen[i] = true;
        }
        assert!(seen.iter().all(|&b| b));
    }
}
