use std::collections::BTreeSet;

use crsq_core::aspect::AspectLexicon;
use crsq_core::exec::Execution;
use crsq_core::select::{detect_activity, sample_per_category, select_candidates, CandidateRecord};
use crsq_core::text::{RuleTagger, Sentence};
use proptest::prelude::*;

const PLANTED: &str = include_str!("fixtures/planted_200.tsv");
const LEXICON: &str = include_str!("fixtures/planted_lexicon.tsv");

fn planted() -> Vec<(bool, Sentence)> {
    let tagger = RuleTagger::default();
    PLANTED
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let (label, text) = l.split_once('\t').unwrap();
            (label == "1", Sentence::analyze(format!("p{i:03}"), 0, text, &tagger))
        })
        .collect()
}

/// Mentions found by scanning the rendered `word/TAG` string for the
/// literal bigram `for/IN <word>/VBG`.
fn scan_bigrams(s: &Sentence) -> Vec<usize> {
    let rendered: Vec<String> = s.tokens.iter().map(|t| format!("{}/{}", t.lower, t.pos)).collect();
    let mut hits = Vec::new();
    for i in 0..rendered.len() {
        if rendered[i] == "for/IN" && i + 1 < rendered.len() && rendered[i + 1].ends_with("/VBG") {
            hits.push(i);
        }
    }
    hits
}

#[test]
fn planted_corpus_precision_and_recall() {
    let data = planted();
    assert_eq!(data.len(), 200);
    assert_eq!(data.iter().filter(|(p, _)| *p).count(), 30);
    let lexicon = AspectLexicon::parse(LEXICON).unwrap();
    let sentences: Vec<Sentence> = data.iter().map(|(_, s)| s.clone()).collect();
    let selected: BTreeSet<String> = select_candidates(&sentences, "Fixture", &lexicon, true, Execution::default())
        .into_iter()
        .map(|c| c.sentence.source_review_id)
        .collect();
    let positives: BTreeSet<String> = data
        .iter()
        .filter(|(p, _)| *p)
        .map(|(_, s)| s.source_review_id.clone())
        .collect();
    let tp = selected.intersection(&positives).count() as f64;
    let precision = tp / selected.len() as f64;
    let recall = tp / positives.len() as f64;
    let missed: Vec<_> = data
        .iter()
        .filter(|(_, s)| positives.contains(&s.source_review_id) != selected.contains(&s.source_review_id))
        .map(|(_, s)| s.text.as_str())
        .collect();
    println!("precision {precision:.3} recall {recall:.3}; disagreements: {missed:#?}");
    assert!(precision >= 0.9, "precision {precision}");
    assert!(recall >= 0.8, "recall {recall}");
}

#[test]
fn detection_matches_bigram_scan_on_every_fixture_sentence() {
    for (_, s) in planted() {
        let found: Vec<usize> = detect_activity(&s).into_iter().map(|m| m.prep_index).collect();
        assert_eq!(found, scan_bigrams(&s), "{}", s.text);
    }
}

fn record(i: usize) -> CandidateRecord {
    CandidateRecord {
        category: "Bikes".into(),
        review_id: format!("r{i:04}"),
        sentence_index: (i % 3) as u32,
        text: format!("sentence {i}"),
        clause_texts: vec![],
    }
}

proptest! {
    #[test]
    fn sampling_ignores_input_order(
        n in 1usize..60,
        k in 1usize..20,
        seed in any::<u64>(),
        perm_seed in any::<u64>(),
    ) {
        let base: Vec<_> = (0..n).map(record).collect();
        let mut shuffled = base.clone();
        let mut state = perm_seed;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        let a = sample_per_category(base, k, seed);
        let b = sample_per_category(shuffled, k, seed);
        prop_assert_eq!(a.len(), k.min(n));
        prop_assert_eq!(a, b);
    }
}
