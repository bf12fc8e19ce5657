use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use crsq_core::question::{
    category_noun, extract_predicate, generate_external, generate_external_batch, generate_template, is_complex,
    AdapterError, HttpAdapter, ProcessAdapter, Provenance, QuestionAdapter, QuestionLabel, TemplateChoice,
    TemplateConfig, DEFAULT_TEMPLATES,
};
use crsq_core::select::{detect_activity, CandidateSentence};
use crsq_core::text::{RuleTagger, Sentence};
use proptest::prelude::*;

const PLANTED: &str = include_str!("fixtures/planted_200.tsv");
const CATEGORIES: &[&str] = &[
    "Backpacking Packs",
    "Tents",
    "Bikes",
    "Jackets",
    "Vacuums",
    "Blenders",
    "Espresso Machines",
    "Grills",
    "Walk-Behind Lawn Mowers",
    "Birdhouses",
    "Feeders",
    "Snow Shovels",
];

fn candidate(id: &str, category: &str, text: &str) -> CandidateSentence {
    let sentence = Sentence::analyze(id, 0, text, &RuleTagger::default());
    let activities = detect_activity(&sentence);
    CandidateSentence { sentence, category: category.into(), aspect_values: vec![], activities }
}

fn positives() -> Vec<String> {
    PLANTED
        .lines()
        .filter_map(|l| l.strip_prefix("1\t"))
        .map(str::to_string)
        .collect()
}

fn occurrences(hay: &str, needle: &str) -> usize {
    hay.match_indices(needle).count()
}

#[test]
fn template_questions_keep_their_shape() {
    let sentences = positives();
    assert_eq!(sentences.len(), 30);
    let mut produced = 0;
    for (k, text) in sentences.iter().enumerate() {
        let category = CATEGORIES[k % CATEGORIES.len()];
        let c = candidate(&format!("p{k}"), category, text);
        let noun = category_noun(category, &TemplateConfig::default()).unwrap();
        let predicate = extract_predicate(&c.sentence, &c.activities[0], &HashMap::new());
        for (t, template) in DEFAULT_TEMPLATES.iter().enumerate() {
            let config = TemplateConfig { choice: TemplateChoice::Fixed(t), ..TemplateConfig::default() };
            let label = generate_template(&c, &config, 7).unwrap();
            let QuestionLabel::Question(q) = label else { continue };
            produced += 1;
            assert!(q.text.ends_with('?'), "{}", q.text);
            assert_eq!(q.provenance, Provenance::Template);
            let filler = if template.contains("{pred}") { predicate.clone() } else { q.usage_clause.clone() };
            assert!(q.text.contains(&filler), "{} / {}", q.text, filler);
            let frame = q.text.replacen(&filler, "", 1);
            assert_eq!(occurrences(&frame, &noun), 1, "{}", q.text);
        }
    }
    assert!(produced >= 100, "{produced}");
}

#[test]
fn generation_is_pure_under_a_seed() {
    let config = TemplateConfig { choice: TemplateChoice::Seeded, ..TemplateConfig::default() };
    let mut seen = std::collections::BTreeSet::new();
    for (k, text) in positives().iter().enumerate() {
        let c = candidate(&format!("p{k}"), "Bikes", text);
        let a = generate_template(&c, &config, 42).unwrap();
        let b = generate_template(&c, &config, 42).unwrap();
        assert_eq!(a, b);
        if let QuestionLabel::Question(q) = a {
            seen.insert(q.text.split(" a bike").next().unwrap().to_string());
        }
    }
    assert!(seen.len() > 1, "seeded choice never varied: {seen:?}");
}

const GERUNDS: &[&str] = &["riding", "hiking", "commuting", "making", "carrying", "camping", "packing", "traveling"];
const FILLER: &[&str] = &["trips", "smoothies", "bread", "the", "long", "with", "on", "kids", "a", "to"];
const JOINERS: &[&str] = &["for", "or", "and", "with"];

/// Activities counted by scanning whitespace-separated words for a known
/// gerund right after "for", "or" or "and".
fn clause_count(words: &[&str]) -> usize {
    (1..words.len())
        .filter(|&i| GERUNDS.contains(&words[i]) && ["for", "or", "and"].contains(&words[i - 1]))
        .count()
}

fn phrase() -> impl Strategy<Value = Vec<&'static str>> {
    let word = prop_oneof![
        prop::sample::select(GERUNDS),
        prop::sample::select(FILLER),
        prop::sample::select(JOINERS),
    ];
    prop::collection::vec(word, 1..14).prop_map(|mut w| {
        w.insert(0, "great");
        w
    })
}

proptest! {
    #[test]
    fn complexity_matches_clause_count(words in phrase()) {
        let text = words.join(" ");
        prop_assert_eq!(is_complex(&text), clause_count(&words) >= 2, "{}", text);
    }
}

fn bike(text: &str) -> CandidateSentence {
    candidate("r1", "Bikes", text)
}

const T: Duration = Duration::from_secs(5);

#[test]
fn process_adapter_sentinel_question_and_malformed() {
    let na = ProcessAdapter::shell("while read l; do echo N/A; done");
    assert_eq!(generate_external(&bike("Nice bike for riding."), &na, T).unwrap(), QuestionLabel::NotApplicable);

    let q = ProcessAdapter::shell("while read l; do echo 'Would you like a bike for riding on trails?'; done");
    let QuestionLabel::Question(got) = generate_external(&bike("Nice bike for riding."), &q, T).unwrap() else {
        panic!("expected a question")
    };
    assert_eq!(got.text, "Would you like a bike for riding on trails?");
    assert_eq!(got.provenance, Provenance::ExternalModel);

    let bad = ProcessAdapter::shell("while read l; do echo 'no question mark'; done");
    assert!(matches!(generate_external(&bike("Nice bike for riding."), &bad, T), Err(AdapterError::Malformed(_))));
}

#[test]
fn process_adapter_receives_category_and_sentence() {
    let echo = ProcessAdapter::shell(r#"while IFS= read -r l; do printf '%s?\n' "$l"; done"#);
    let resp = echo.request("Bikes\tNice bike for riding.", T).unwrap();
    assert_eq!(resp, "Bikes\tNice bike for riding.?");
    // the same child serves a second request
    assert_eq!(echo.request("x", T).unwrap(), "x?");
}

#[test]
fn process_adapter_times_out() {
    let slow = ProcessAdapter::shell("while read l; do sleep 5; echo late?; done");
    let start = Instant::now();
    let err = slow.request("Bikes\tx", Duration::from_millis(300)).unwrap_err();
    assert_eq!(err, AdapterError::Timeout(Duration::from_millis(300)));
    assert!(start.elapsed() < Duration::from_secs(3));
}

#[test]
fn process_adapter_unreachable() {
    let missing = ProcessAdapter::new("/nonexistent/question-model", vec![]);
    assert!(matches!(missing.request("x", T), Err(AdapterError::Unreachable(_))));
    let quits = ProcessAdapter::shell("exit 0");
    assert!(matches!(quits.request("x", T), Err(AdapterError::Unreachable(_))));
}

#[test]
fn batch_preserves_order_and_bounds_concurrency() {
    struct Probe {
        now: AtomicUsize,
        peak: AtomicUsize,
    }
    impl QuestionAdapter for Probe {
        fn request(&self, line: &str, _timeout: Duration) -> Result<String, AdapterError> {
            let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(n, Ordering::SeqCst);
            thread::sleep(Duration::from_millis(10));
            self.now.fetch_sub(1, Ordering::SeqCst);
            let sentence = line.split('\t').nth(1).unwrap();
            if sentence.contains("7") {
                return Ok("garbage".into());
            }
            Ok(format!("Q {sentence}?"))
        }
    }
    let probe = Probe { now: AtomicUsize::new(0), peak: AtomicUsize::new(0) };
    let cands: Vec<_> = (0..20).map(|i| bike(&format!("Good for riding {i}."))).collect();
    let out = generate_external_batch(&cands, &probe, T, 3);
    assert_eq!(out.len(), 20);
    for (i, r) in out.iter().enumerate() {
        if i == 7 || i == 17 {
            assert!(matches!(r, Err(AdapterError::Malformed(_))));
        } else {
            assert_eq!(r.as_ref().unwrap().text(), format!("Q Good for riding {i}.?"));
        }
    }
    assert!(probe.peak.load(Ordering::SeqCst) <= 3);
}

/// Minimal HTTP/1.1 server answering each POST with `respond(body)` after
/// `delay`.
fn serve(delay: Duration, respond: fn(&str) -> String) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            counter.fetch_add(1, Ordering::SeqCst);
            thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                thread::sleep(delay);
                let out = respond(&String::from_utf8(body).unwrap());
                let _ = write!(
                    stream,
                    "HTTP/1.1 200 OK\r\ncontent-type: text/plain\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    out.len(),
                    out
                );
            });
        }
    });
    (format!("http://{addr}/generate"), hits)
}

#[test]
fn http_adapter_round_trip() {
    let (url, hits) = serve(Duration::ZERO, |body| {
        let sentence = body.split('\t').nth(1).unwrap_or("");
        if sentence.contains("sure") {
            "N/A\n".into()
        } else {
            "Are you looking for a bike for commuting?\nignored".into()
        }
    });
    let http = HttpAdapter::new(url);
    let q = generate_external(&bike("Great for commuting."), &http, T).unwrap();
    assert_eq!(q.text(), "Are you looking for a bike for commuting?");
    let na = generate_external(&bike("Good for sure, nothing for nothing."), &http, T).unwrap();
    assert!(na.is_na());
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[test]
fn http_adapter_timeout_and_unreachable() {
    let (url, _) = serve(Duration::from_secs(3), |_| "late?".into());
    let http = HttpAdapter::new(url);
    let err = http.request("Bikes\tx", Duration::from_millis(300)).unwrap_err();
    assert!(matches!(err, AdapterError::Timeout(_)), "{err:?}");

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let closed = HttpAdapter::new(format!("http://127.0.0.1:{port}/"));
    assert!(matches!(closed.request("x", T), Err(AdapterError::Unreachable(_))));
}
