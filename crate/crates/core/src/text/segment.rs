use std::collections::HashSet;
use std::ops::Range;

use super::{Sentence, Tagger};

/// Built-in abbreviations that never end a sentence.
pub(crate) const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "approx.", "e.g.", "i.e.", "vs.", "lbs.", "lb.", "etc.", "mr.", "mrs.", "ms.", "dr.", "oz.",
    "ft.", "in.", "no.", "st.", "jr.", "sr.", "qt.", "pt.", "gal.", "min.", "max.", "cu.", "sq.",
    "yds.", "yd.", "hr.", "hrs.", "inc.", "co.", "ltd.", "dept.", "est.", "fig.", "cf.", "ca.",
];

/// Abbreviation list consulted by the sentence splitter.
#[derive(Debug, Clone)]
pub struct Abbreviations(HashSet<String>);

impl Default for Abbreviations {
    fn default() -> Self {
        Abbreviations(DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect())
    }
}

impl Abbreviations {
    /// Parses a resource file: one abbreviation per line, `#` comments.
    pub fn from_lines(text: &str) -> Self {
        Abbreviations(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| {
                    let l = l.to_lowercase();
                    if l.ends_with('.') {
                        l
                    } else {
                        format!("{l}.")
                    }
                })
                .collect(),
        )
    }

    pub fn contains(&self, word_with_period: &str) -> bool {
        self.0.contains(&word_with_period.to_lowercase())
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '\u{2026}')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{2019}' | '\u{201d}')
}

/// Byte ranges of the sentences in `text`, trimmed of surrounding
/// whitespace. A sentence ends at a run of `.`, `!`, `?` (plus closing
/// quotes or brackets) followed by whitespace or the end of the text,
/// unless the run is a single period ending an abbreviation or initial.
pub fn sentence_spans(text: &str, abbreviations: &Abbreviations) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if !is_terminal(c) {
            continue;
        }
        let mut end = i + c.len_utf8();
        let mut single_period = c == '.';
        while let Some(&(j, n)) = iter.peek() {
            if is_terminal(n) {
                single_period = false;
            } else if !is_closing(n) {
                break;
            }
            end = j + n.len_utf8();
            iter.next();
        }
        let at_break = iter.peek().is_none_or(|&(_, n)| n.is_whitespace());
        if !at_break {
            continue;
        }
        if single_period && ends_with_abbreviation(&text[start..i + 1], abbreviations) {
            continue;
        }
        push_trimmed(text, start..end, &mut spans);
        start = end;
    }
    push_trimmed(text, start..text.len(), &mut spans);
    spans
}

fn ends_with_abbreviation(prefix: &str, abbreviations: &Abbreviations) -> bool {
    let word = prefix
        .rsplit(|c: char| c.is_whitespace() || c == '(' || c == '"')
        .next()
        .unwrap_or("");
    if abbreviations.contains(word) {
        return true;
    }
    let body = &word[..word.len().saturating_sub(1)];
    let mut chars = body.chars();
    // A lone capital initial such as "J." in "J. Smith".
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_uppercase())
}

fn push_trimmed(text: &str, range: Range<usize>, spans: &mut Vec<Range<usize>>) {
    let slice = &text[range.clone()];
    let trimmed_start = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if !trimmed.is_empty() {
        let s = range.start + trimmed_start;
        spans.push(s..s + trimmed.len());
    }
}

/// Splits review text into tokenized, tagged sentences numbered from zero.
pub fn split_sentences(
    review_id: &str,
    text: &str,
    abbreviations: &Abbreviations,
    tagger: &dyn Tagger,
) -> Vec<Sentence> {
    sentence_spans(text, abbreviations)
        .into_iter()
        .enumerate()
        .map(|(i, span)| Sentence::analyze(review_id, i as u32, &text[span], tagger))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(text: &str) -> Vec<&str> {
        sentence_spans(text, &Abbreviations::default())
            .into_iter()
            .map(|r| &text[r])
            .collect()
    }

    #[test]
    fn splits_on_clear_boundary() {
        assert_eq!(
            split("Great for making smoothies. Works well."),
            ["Great for making smoothies.", "Works well."]
        );
    }

    #[test]
    fn empty_text_has_no_sentences() {
        assert!(split("").is_empty());
        assert!(split("   ").is_empty());
    }

    #[test]
    fn abbreviation_does_not_split() {
        assert_eq!(
            split("It weighs approx. 5 lbs and rides well."),
            ["It weighs approx. 5 lbs and rides well."]
        );
        assert_eq!(split("Dr. Smith liked it, e.g. for hiking."), ["Dr. Smith liked it, e.g. for hiking."]);
    }

    #[test]
    fn handles_runs_quotes_and_decimals() {
        assert_eq!(
            split("Wow!!! It said \"great.\" Holds 2.5 gallons... ok"),
            ["Wow!!!", "It said \"great.\"", "Holds 2.5 gallons...", "ok"]
        );
    }

    #[test]
    fn lowercase_continuation_still_splits() {
        assert_eq!(split("works well. love it"), ["works well.", "love it"]);
    }

    #[test]
    fn custom_abbreviations() {
        let abbr = Abbreviations::from_lines("# units\napprox\nkm.\n");
        assert!(abbr.contains("Approx."));
        assert!(abbr.contains("km."));
        assert!(!abbr.contains("lbs."));
    }
}
