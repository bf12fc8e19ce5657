use std::fmt;

use serde::{Deserialize, Serialize};

use super::segment::DEFAULT_ABBREVIATIONS;

/// Penn Treebank tag subset used by the pipeline. Tags outside the subset
/// collapse to `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pos {
    #[serde(rename = "IN")]
    In,
    #[serde(rename = "VBG")]
    Vbg,
    #[serde(rename = "JJ")]
    Jj,
    #[serde(rename = "JJR")]
    Jjr,
    #[serde(rename = "JJS")]
    Jjs,
    #[serde(rename = "NN")]
    Nn,
    #[serde(rename = "NNS")]
    Nns,
    #[serde(rename = "NNP")]
    Nnp,
    #[serde(rename = "DT")]
    Dt,
    #[serde(rename = "RB")]
    Rb,
    #[serde(rename = "PRP")]
    Prp,
    #[serde(rename = "PRP$")]
    PrpS,
    #[serde(rename = "VB")]
    Vb,
    #[serde(rename = "VBD")]
    Vbd,
    #[serde(rename = "VBN")]
    Vbn,
    #[serde(rename = "VBP")]
    Vbp,
    #[serde(rename = "VBZ")]
    Vbz,
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "OTHER")]
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::In => "IN",
            Pos::Vbg => "VBG",
            Pos::Jj => "JJ",
            Pos::Jjr => "JJR",
            Pos::Jjs => "JJS",
            Pos::Nn => "NN",
            Pos::Nns => "NNS",
            Pos::Nnp => "NNP",
            Pos::Dt => "DT",
            Pos::Rb => "RB",
            Pos::Prp => "PRP",
            Pos::PrpS => "PRP$",
            Pos::Vb => "VB",
            Pos::Vbd => "VBD",
            Pos::Vbn => "VBN",
            Pos::Vbp => "VBP",
            Pos::Vbz => "VBZ",
            Pos::Cc => "CC",
            Pos::Other => "OTHER",
        }
    }

    /// Maps a full Penn Treebank tag onto the subset.
    pub fn from_ptb(tag: &str) -> Pos {
        match tag {
            "IN" => Pos::In,
            "VBG" => Pos::Vbg,
            "JJ" => Pos::Jj,
            "JJR" => Pos::Jjr,
            "JJS" => Pos::Jjs,
            "NN" => Pos::Nn,
            "NNS" => Pos::Nns,
            "NNP" | "NNPS" => Pos::Nnp,
            "DT" | "PDT" => Pos::Dt,
            "RB" | "RBR" | "RBS" => Pos::Rb,
            "PRP" => Pos::Prp,
            "PRP$" => Pos::PrpS,
            "VB" => Pos::Vb,
            "VBD" => Pos::Vbd,
            "VBN" => Pos::Vbn,
            "VBP" => Pos::Vbp,
            "VBZ" => Pos::Vbz,
            "CC" => Pos::Cc,
            _ => Pos::Other,
        }
    }

    pub fn is_adjective(self) -> bool {
        matches!(self, Pos::Jj | Pos::Jjr | Pos::Jjs)
    }

    pub fn is_common_noun(self) -> bool {
        matches!(self, Pos::Nn | Pos::Nns)
    }

    pub fn is_verb(self) -> bool {
        matches!(
            self,
            Pos::Vb | Pos::Vbd | Pos::Vbg | Pos::Vbn | Pos::Vbp | Pos::Vbz
        )
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A token of a sentence. `offset` is the byte offset of `surface` within
/// the sentence text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lower: String,
    pub pos: Pos,
    pub offset: usize,
}

impl Token {
    pub fn new(surface: &str, offset: usize) -> Self {
        Token {
            surface: surface.to_string(),
            lower: lowercase(surface),
            pos: Pos::Other,
            offset,
        }
    }

    pub fn end(&self) -> usize {
        self.offset + self.surface.len()
    }
}

fn lowercase(s: &str) -> String {
    if s.bytes().all(|b| !b.is_ascii_uppercase() && b.is_ascii()) {
        s.to_string()
    } else {
        s.to_lowercase()
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_connector(c: char) -> bool {
    matches!(c, '-' | '.' | '/' | '&' | '_') || is_apostrophe(c)
}

/// Splits sentence text into word and punctuation tokens. Tags are left
/// as `Pos::Other`; see [`super::Tagger`].
///
/// Contractions are split at the apostrophe (`that's` -> `that` `'s`),
/// except negations which follow the treebank convention (`don't` -> `do`
/// `n't`).
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::with_capacity(text.len() / 4 + 1);
    let mut chunk_start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = chunk_start.take() {
                push_chunk(&text[s..i], s, &mut out);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(s) = chunk_start {
        push_chunk(&text[s..], s, &mut out);
    }
    out
}

fn push_chunk(chunk: &str, base: usize, out: &mut Vec<Token>) {
    // Leading punctuation.
    let mut core_start = 0;
    for (i, c) in chunk.char_indices() {
        if c.is_alphanumeric() {
            break;
        }
        out.push(Token::new(&chunk[i..i + c.len_utf8()], base + i));
        core_start = i + c.len_utf8();
    }
    if core_start == chunk.len() {
        return;
    }
    // Trailing punctuation, pushed after the core in original order.
    let mut core_end = chunk.len();
    for (i, c) in chunk[core_start..].char_indices().rev() {
        if c.is_alphanumeric() {
            break;
        }
        core_end = core_start + i;
    }
    if core_end < chunk.len() && chunk[core_end..].starts_with('.') {
        let candidate = &chunk[core_start..core_end + 1];
        if keeps_final_period(candidate) {
            core_end += 1;
        }
    }
    push_core(&chunk[core_start..core_end], base + core_start, out);
    for (i, c) in chunk[core_end..].char_indices() {
        let at = core_end + i;
        out.push(Token::new(&chunk[at..at + c.len_utf8()], base + at));
    }
}

/// Whether a word ending in `.` is an abbreviation or initial that owns
/// its period.
fn keeps_final_period(word_with_period: &str) -> bool {
    let lower = lowercase(word_with_period);
    if DEFAULT_ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    let body = &lower[..lower.len() - 1];
    let mut chars = body.chars();
    // Single-letter initials and dotted acronyms ("u.s.").
    matches!((chars.next(), chars.next()), (Some(c), None) if c.is_alphabetic())
        || (body.contains('.') && body.split('.').all(|p| p.chars().count() == 1))
}

fn push_core(core: &str, base: usize, out: &mut Vec<Token>) {
    let mut word_start: Option<usize> = None;
    let mut prev: Option<char> = None;
    let mut iter = core.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        let next = iter.peek().map(|&(_, n)| n);
        let joins = if c.is_alphanumeric() {
            true
        } else if c == ',' {
            prev.is_some_and(|p| p.is_ascii_digit()) && next.is_some_and(|n| n.is_ascii_digit())
        } else if c == '.' && next.is_none() {
            // Only reachable when the final period was kept on purpose.
            word_start.is_some()
        } else {
            is_connector(c)
                && prev.is_some_and(char::is_alphanumeric)
                && next.is_some_and(char::is_alphanumeric)
        };
        if joins {
            word_start.get_or_insert(i);
        } else {
            if let Some(s) = word_start.take() {
                push_word(&core[s..i], base + s, out);
            }
            out.push(Token::new(&core[i..i + c.len_utf8()], base + i));
        }
        prev = Some(c);
    }
    if let Some(s) = word_start {
        push_word(&core[s..], base + s, out);
    }
}

const CLITICS: &[&str] = &["s", "re", "ve", "ll", "d", "m"];

fn push_word(word: &str, base: usize, out: &mut Vec<Token>) {
    let Some((apos, ac)) = word.char_indices().rev().find(|&(_, c)| is_apostrophe(c)) else {
        out.push(Token::new(word, base));
        return;
    };
    let suffix = &word[apos + ac.len_utf8()..];
    let lower_suffix = suffix.to_ascii_lowercase();
    if lower_suffix == "t" && apos > 1 && word[..apos].to_ascii_lowercase().ends_with('n') {
        let split = apos - 1;
        out.push(Token::new(&word[..split], base));
        out.push(Token::new(&word[split..], base + split));
    } else if apos > 0 && CLITICS.contains(&lower_suffix.as_str()) {
        out.push(Token::new(&word[..apos], base));
        out.push(Token::new(&word[apos..], base + apos));
    } else {
        out.push(Token::new(word, base));
    }
}
