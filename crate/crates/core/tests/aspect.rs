use std::collections::{BTreeMap, BTreeSet};

use crsq_core::aspect::{extract_pairs, mine_aspect_lexicon, AspectLexicon, PairPattern, STOPWORD_NOUNS};
use crsq_core::exec::Execution;
use crsq_core::text::{Pos, RuleTagger, Sentence, Token};
use proptest::prelude::*;

const TIRES: &[&str] = &[
    "The new tires grip well.",
    "Tires are great on gravel.",
    "I like the wide tires a lot.",
    "Its tires were really durable.",
    "The frame is light.",
    "The seat is comfortable.",
    "Great seat.",
    "We ride every day.",
    "The tires came flat.",
    "Nice bike for commuting.",
];

const VOCAB: &[(&str, Pos)] = &[
    ("tire", Pos::Nn),
    ("tires", Pos::Nns),
    ("seat", Pos::Nn),
    ("bikes", Pos::Nns),
    ("boxes", Pos::Nns),
    ("batteries", Pos::Nns),
    ("thing", Pos::Nn),
    ("good", Pos::Jj),
    ("better", Pos::Jjr),
    ("best", Pos::Jjs),
    ("is", Pos::Vbz),
    ("are", Pos::Vbp),
    ("was", Pos::Vbd),
    ("were", Pos::Vbd),
    ("very", Pos::Rb),
    ("really", Pos::Rb),
    ("the", Pos::Dt),
    ("for", Pos::In),
    ("riding", Pos::Vbg),
    ("it", Pos::Prp),
    ("seems", Pos::Vbz),
    (",", Pos::Other),
];

fn lemma(w: &str) -> &str {
    match w {
        "tires" => "tire",
        "bikes" => "bike",
        "boxes" => "box",
        "batteries" => "battery",
        other => other,
    }
}

fn noun(p: Pos) -> bool {
    matches!(p, Pos::Nn | Pos::Nns)
}

fn adj(p: Pos) -> bool {
    matches!(p, Pos::Jj | Pos::Jjr | Pos::Jjs)
}

/// Every (adjective, noun) index pair that satisfies one of the two
/// patterns, judged pair by pair.
fn pattern_pairs(toks: &[Token]) -> Vec<(usize, usize, PairPattern)> {
    let mut out = Vec::new();
    for n in 0..toks.len() {
        if !noun(toks[n].pos) {
            continue;
        }
        for a in 0..toks.len() {
            if !adj(toks[a].pos) {
                continue;
            }
            if a + 1 == n {
                out.push((a, n, PairPattern::AdjNoun));
                continue;
            }
            if a <= n + 1 {
                continue;
            }
            for c in n + 1..a {
                let copula = ["is", "are", "was", "were"].contains(&toks[c].lower.as_str());
                let adverbs = |r: std::ops::Range<usize>| r.into_iter().all(|k| toks[k].pos == Pos::Rb);
                if copula && c - n <= 2 && a - c <= 2 && adverbs(n + 1..c) && adverbs(c + 1..a) {
                    out.push((a, n, PairPattern::NounCopulaAdj));
                }
            }
        }
    }
    out
}

/// One describing adjective per noun, the attributive one first.
fn oracle_pairs(toks: &[Token]) -> BTreeMap<usize, (usize, PairPattern)> {
    let mut best: BTreeMap<usize, (usize, PairPattern)> = BTreeMap::new();
    for (a, n, p) in pattern_pairs(toks) {
        match best.get(&n) {
            Some((_, PairPattern::AdjNoun)) => {}
            _ if p == PairPattern::AdjNoun => {
                best.insert(n, (a, p));
            }
            None => {
                best.insert(n, (a, p));
            }
            _ => {}
        }
    }
    best
}

fn oracle_counts(sentences: &[Sentence]) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for s in sentences {
        for n in oracle_pairs(&s.tokens).keys() {
            let l = lemma(&s.tokens[*n].lower).to_string();
            if !STOPWORD_NOUNS.contains(&l.as_str()) {
                *counts.entry(l).or_insert(0) += 1;
            }
        }
    }
    counts
}

fn tagged(words: &[usize]) -> Sentence {
    let mut text = String::new();
    let mut tokens = Vec::new();
    for &w in words {
        let (surface, pos) = VOCAB[w];
        if !text.is_empty() {
            text.push(' ');
        }
        let mut t = Token::new(surface, text.len());
        t.pos = pos;
        tokens.push(t);
        text.push_str(surface);
    }
    Sentence { source_review_id: "g".into(), index_in_review: 0, text, tokens }
}

fn sentences() -> impl Strategy<Value = Vec<Sentence>> {
    prop::collection::vec(prop::collection::vec(0..VOCAB.len(), 1..14).prop_map(|w| tagged(&w)), 1..40)
}

#[test]
fn tire_is_mined_with_support_four() {
    let tagger = RuleTagger::default();
    let s: Vec<Sentence> = TIRES
        .iter()
        .enumerate()
        .map(|(i, t)| Sentence::analyze(format!("t{i}"), 0, *t, &tagger))
        .collect();
    let lex = mine_aspect_lexicon("Bikes", &s, 3, Execution::default());
    assert_eq!(lex.support("tire"), Some(4));
    assert_eq!(oracle_counts(&s).get("tire"), Some(&4));
    assert_eq!(lex.ranked(), vec![("tire", 4)]);
    let lex1 = mine_aspect_lexicon("Bikes", &s, 1, Execution::Sequential);
    assert_eq!(lex1.support("seat"), Some(2));
    assert!(!lex1.contains("day"));
}

#[test]
fn lexicon_text_round_trip() {
    let mut lex = AspectLexicon::new("Blenders");
    lex.insert("lid", 7);
    lex.insert("motor", 12);
    lex.insert("jar", 7);
    let back = AspectLexicon::parse(&lex.to_text()).unwrap();
    assert_eq!(back, lex);
    assert_eq!(back.ranked(), vec![("motor", 12), ("jar", 7), ("lid", 7)]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn extraction_matches_exhaustive_pair_scan(words in prop::collection::vec(0..VOCAB.len(), 1..16)) {
        let s = tagged(&words);
        let mut all = AspectLexicon::new("G");
        for (w, _) in VOCAB {
            all.insert(lemma(w), 1);
        }
        let got: Vec<(String, String, PairPattern)> = extract_pairs(&s, &all)
            .into_iter()
            .map(|p| (p.aspect, p.value, p.pattern))
            .collect();
        let want: Vec<(String, String, PairPattern)> = oracle_pairs(&s.tokens)
            .into_iter()
            .map(|(n, (a, p))| (lemma(&s.tokens[n].lower).to_string(), s.tokens[a].lower.clone(), p))
            .collect();
        prop_assert_eq!(got, want);
    }
}

proptest! {
    #[test]
    fn mined_support_is_sound(s in sentences(), k in 1u64..5) {
        let lex = mine_aspect_lexicon("G", &s, k, Execution::default());
        let counts = oracle_counts(&s);
        for (aspect, support) in lex.ranked() {
            prop_assert!(support >= k);
            prop_assert_eq!(counts.get(aspect), Some(&support));
        }
        let expected: BTreeSet<&str> = counts.iter().filter(|(_, c)| **c >= k).map(|(a, _)| a.as_str()).collect();
        let got: BTreeSet<&str> = lex.ranked().into_iter().map(|(a, _)| a).collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn raising_min_support_only_removes(s in sentences(), k in 1u64..5) {
        let lo = mine_aspect_lexicon("G", &s, k, Execution::Sequential);
        let hi = mine_aspect_lexicon("G", &s, k + 1, Execution::default());
        for (aspect, support) in hi.ranked() {
            prop_assert_eq!(lo.support(aspect), Some(support));
        }
        prop_assert!(hi.len() <= lo.len());
    }
}
