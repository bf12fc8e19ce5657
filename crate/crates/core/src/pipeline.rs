//! Chunked streaming over a review dump: sentence splitting, aspect
//! counting and candidate selection, each chunk processed in parallel.

use std::collections::HashMap;
use std::io::{self, BufRead};
use std::sync::Arc;

use crate::aspect::{aspect_contexts, AspectLexicon};
use crate::corpus::{Category, IngestStats, Review, ReviewStream};
use crate::exec::Execution;
use crate::select::{candidate, CandidateSentence};
use crate::text::{sentence_spans, split_sentences, Abbreviations, Sentence, Tagger};

pub const DEFAULT_CHUNK: usize = 2048;

pub struct PipelineOptions<'a> {
    pub tagger: &'a dyn Tagger,
    pub abbreviations: &'a Abbreviations,
    pub require_aspect: bool,
    pub chunk_size: usize,
    pub exec: Execution,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SelectionStats {
    pub ingest: IngestStats,
    pub sentences: u64,
    pub candidates: u64,
}

/// Whether a sentence can contain a "for" + progressive verb bigram at
/// all. Sentences failing this test are never candidates, so they are not
/// tagged.
fn may_mention_activity(text: &str) -> bool {
    let lower = text.to_ascii_lowercase();
    lower
        .match_indices("for")
        .any(|(i, _)| lower[i + 3..].contains("ing"))
}

fn review_candidates(
    review: &Review,
    category: &Category,
    lexicons: &HashMap<String, AspectLexicon>,
    opts: &PipelineOptions<'_>,
) -> (u64, Vec<CandidateSentence>) {
    let empty = AspectLexicon::new(category.name.clone());
    let lexicon = lexicons.get(&category.name).unwrap_or(&empty);
    let spans = sentence_spans(&review.text, opts.abbreviations);
    let n = spans.len() as u64;
    let found = spans
        .into_iter()
        .enumerate()
        .filter(|(_, span)| may_mention_activity(&review.text[span.clone()]))
        .filter_map(|(i, span)| {
            let s = Sentence::analyze(review.review_id.as_str(), i as u32, &review.text[span], opts.tagger);
            candidate(&s, &category.name, lexicon, opts.require_aspect)
        })
        .collect();
    (n, found)
}

/// Streams every review through sentence splitting and candidate
/// selection, handing candidates to `sink` in input order.
pub fn select_stream<R: BufRead>(
    stream: &mut ReviewStream<'_, R>,
    lexicons: &HashMap<String, AspectLexicon>,
    opts: &PipelineOptions<'_>,
    mut sink: impl FnMut(CandidateSentence) -> io::Result<()>,
) -> io::Result<SelectionStats> {
    let mut stats = SelectionStats::default();
    loop {
        let chunk = stream.next_chunk(opts.chunk_size.max(1))?;
        if chunk.is_empty() {
            break;
        }
        let results = opts
            .exec
            .map(&chunk, |(review, cat)| review_candidates(review, cat, lexicons, opts));
        for (n, found) in results {
            stats.sentences += n;
            for c in found {
                stats.candidates += 1;
                sink(c)?;
            }
        }
    }
    stats.ingest = *stream.stats();
    Ok(stats)
}

fn merge_counts(mut a: HashMap<String, HashMap<String, u64>>, b: HashMap<String, HashMap<String, u64>>) -> HashMap<String, HashMap<String, u64>> {
    for (cat, counts) in b {
        let dst = a.entry(cat).or_default();
        for (k, v) in counts {
            *dst.entry(k).or_default() += v;
        }
    }
    a
}

/// Mines one aspect lexicon per category over the whole stream.
pub fn mine_stream<R: BufRead>(
    stream: &mut ReviewStream<'_, R>,
    min_support: u64,
    opts: &PipelineOptions<'_>,
) -> io::Result<(HashMap<String, AspectLexicon>, SelectionStats)> {
    let mut totals: HashMap<String, HashMap<String, u64>> = HashMap::new();
    let mut stats = SelectionStats::default();
    loop {
        let chunk: Vec<(Review, Arc<Category>)> = stream.next_chunk(opts.chunk_size.max(1))?;
        if chunk.is_empty() {
            break;
        }
        let partial = opts.exec.fold_reduce(
            &chunk,
            || (0u64, HashMap::new()),
            |(n, mut acc): (u64, HashMap<String, HashMap<String, u64>>), (review, cat)| {
                let sentences = split_sentences(&review.review_id, &review.text, opts.abbreviations, opts.tagger);
                let counts = acc.entry(cat.name.clone()).or_default();
                for s in &sentences {
                    for noun in aspect_contexts(s) {
                        *counts.entry(noun).or_default() += 1;
                    }
                }
                (n + sentences.len() as u64, acc)
            },
            |(n1, a), (n2, b)| (n1 + n2, merge_counts(a, b)),
        );
        stats.sentences += partial.0;
        totals = merge_counts(totals, partial.1);
    }
    stats.ingest = *stream.stats();
    let lexicons = totals
        .into_iter()
        .map(|(cat, counts)| {
            let lex = AspectLexicon::from_counts(&cat, counts, min_support);
            (cat, lex)
        })
        .collect();
    Ok((lexicons, stats))
}
