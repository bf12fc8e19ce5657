use crsq_core::text::{sentence_spans, split_sentences, tokenize, Abbreviations, RuleTagger, Tagger};
use proptest::prelude::*;

const SEGMENTATION: &str = include_str!("fixtures/segmentation.txt");
const TOKENS_23: &str = include_str!("fixtures/tokens_23.tsv");

fn segmentation_cases() -> Vec<(String, Vec<String>)> {
    let mut cases: Vec<(String, Vec<String>)> = Vec::new();
    for line in SEGMENTATION.lines() {
        if let Some(t) = line.strip_prefix("T: ") {
            cases.push((t.to_string(), Vec::new()));
        } else if let Some(s) = line.strip_prefix("S: ") {
            cases.last_mut().unwrap().1.push(s.to_string());
        }
    }
    cases
}

#[test]
fn hand_segmented_reviews() {
    let abbreviations = Abbreviations::default();
    let cases = segmentation_cases();
    assert!(cases.len() >= 12);
    for (text, expected) in cases {
        let got: Vec<&str> = sentence_spans(&text, &abbreviations)
            .into_iter()
            .map(|r| &text[r])
            .collect();
        assert_eq!(got, expected, "{text}");
    }
}

#[test]
fn abbreviation_does_not_end_sentence() {
    let text = "It weighs approx. 5 lbs and rides well.";
    let s = split_sentences("r", text, &Abbreviations::default(), &RuleTagger::default());
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].text, text);
}

#[test]
fn hand_counted_tokens_and_offsets() {
    let mut lines = TOKENS_23.lines();
    let text = lines.next().unwrap().strip_prefix("# ").unwrap();
    let expected: Vec<(&str, usize)> = lines
        .map(|l| {
            let (tok, off) = l.split_once('\t').unwrap();
            (tok, off.parse().unwrap())
        })
        .collect();
    assert_eq!(expected.len(), 23);
    let got: Vec<(&str, usize)> = tokenize(text).iter().map(|t| (&text[t.offset..t.end()], t.offset)).collect();
    assert_eq!(got, expected);
    for t in tokenize(text) {
        assert_eq!(&text[t.offset..t.end()], t.surface);
    }
}

#[test]
fn sentence_indices_count_from_zero() {
    let s = split_sentences(
        "r9",
        "One. Two! Three?",
        &Abbreviations::default(),
        &RuleTagger::default(),
    );
    let idx: Vec<u32> = s.iter().map(|s| s.index_in_review).collect();
    assert_eq!(idx, [0, 1, 2]);
    assert!(s.iter().all(|s| s.source_review_id == "r9"));
}

fn review_text() -> impl Strategy<Value = String> {
    let word = prop_oneof![
        "[a-zA-Z]{1,9}",
        "[0-9]{1,3}(\\.[0-9])?",
        Just("don't".to_string()),
        Just("it's".to_string()),
        Just("approx.".to_string()),
        Just("e.g.".to_string()),
        Just("U.S.".to_string()),
        Just("for".to_string()),
        Just("riding".to_string()),
        "[a-z]{2,6}-[a-z]{2,6}",
        "[(\"'][a-z]{1,6}[)\"']",
        "[a-zé]{1,5}",
    ];
    let sep = prop_oneof![
        Just(" ".to_string()),
        Just(", ".to_string()),
        Just(". ".to_string()),
        Just("! ".to_string()),
        Just("?! ".to_string()),
        Just("... ".to_string()),
        Just("\n".to_string()),
        Just("  ".to_string()),
    ];
    prop::collection::vec((word, sep), 0..40)
        .prop_map(|parts| parts.into_iter().map(|(w, s)| w + &s).collect())
}

fn squeeze(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

proptest! {
    #[test]
    fn tokens_reassemble_the_text(text in review_text()) {
        let tokens = tokenize(&text);
        let mut last_end = 0;
        for t in &tokens {
            prop_assert!(t.offset >= last_end);
            prop_assert_eq!(&text[t.offset..t.end()], t.surface.as_str());
            prop_assert!(text[last_end..t.offset].chars().all(char::is_whitespace));
            last_end = t.end();
        }
        prop_assert!(text[last_end..].chars().all(char::is_whitespace));
        let joined: String = tokens.iter().map(|t| t.surface.as_str()).collect();
        prop_assert_eq!(joined, squeeze(&text));
    }

    #[test]
    fn sentences_partition_the_text(text in review_text()) {
        let spans = sentence_spans(&text, &Abbreviations::default());
        let mut last_end = 0;
        for r in &spans {
            prop_assert!(r.start >= last_end && r.end > r.start);
            prop_assert!(text[last_end..r.start].chars().all(char::is_whitespace));
            last_end = r.end;
        }
        prop_assert!(text[last_end..].chars().all(char::is_whitespace));
        let joined: String = spans.iter().map(|r| &text[r.clone()]).collect();
        prop_assert_eq!(squeeze(&joined), squeeze(&text));
    }

    #[test]
    fn tagging_is_total_and_deterministic(text in review_text()) {
        let tagger = RuleTagger::default();
        let mut a = tokenize(&text);
        let mut b = a.clone();
        let before: Vec<String> = a.iter().map(|t| t.surface.clone()).collect();
        tagger.tag(&mut a);
        tagger.tag(&mut b);
        prop_assert_eq!(&a, &b);
        let after: Vec<String> = a.iter().map(|t| t.surface.clone()).collect();
        prop_assert_eq!(before, after);
        for t in &a {
            prop_assert!(!t.pos.as_str().is_empty());
        }
    }
}
