use std::collections::{HashMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use super::{Pos, Token};

/// Assigns a part-of-speech tag to every token in place.
pub trait Tagger: Send + Sync {
    fn tag(&self, tokens: &mut [Token]);
}

const CLOSED_CLASS: &str = include_str!("../../resources/closed_class.tsv");
const ADJECTIVES: &str = include_str!("../../resources/adjectives.txt");
const ADVERBS: &str = include_str!("../../resources/adverbs.txt");
const VERBS: &str = include_str!("../../resources/verbs.tsv");
const NOUNS: &str = include_str!("../../resources/nouns.txt");
const GERUND_EXCEPTIONS: &str = include_str!("../../resources/gerund_exceptions.txt");

fn entries(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn word_set(text: &str) -> HashSet<String> {
    entries(text).map(str::to_lowercase).collect()
}

fn tagged_words(text: &str) -> HashMap<String, String> {
    entries(text)
        .filter_map(|l| {
            let (w, t) = l.split_once('\t')?;
            Some((w.trim().to_lowercase(), t.trim().to_string()))
        })
        .collect()
}

/// Word lists backing [`RuleTagger`]. Each list is a plain-text resource,
/// one entry per line; tagged lists use `word<TAB>TAG`.
#[derive(Debug, Clone)]
pub struct Lexicon {
    closed: HashMap<String, String>,
    adjectives: HashSet<String>,
    adverbs: HashSet<String>,
    verbs: HashMap<String, Pos>,
    nouns: HashSet<String>,
    gerund_exceptions: HashSet<String>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::builtin()
    }
}

impl Lexicon {
    pub fn builtin() -> Self {
        Lexicon {
            closed: tagged_words(CLOSED_CLASS),
            adjectives: word_set(ADJECTIVES),
            adverbs: word_set(ADVERBS),
            verbs: tagged_words(VERBS)
                .into_iter()
                .map(|(w, t)| (w, Pos::from_ptb(&t)))
                .collect(),
            nouns: word_set(NOUNS),
            gerund_exceptions: word_set(GERUND_EXCEPTIONS),
        }
    }

    /// Replaces built-in lists with any override files present in `dir`
    /// (`closed_class.tsv`, `adjectives.txt`, `adverbs.txt`, `verbs.tsv`,
    /// `nouns.txt`, `gerund_exceptions.txt`).
    pub fn with_overrides(mut self, dir: &Path) -> io::Result<Self> {
        let read = |name: &str| -> io::Result<Option<String>> {
            let p = dir.join(name);
            if p.exists() {
                fs::read_to_string(p).map(Some)
            } else {
                Ok(None)
            }
        };
        if let Some(t) = read("closed_class.tsv")? {
            self.closed = tagged_words(&t);
        }
        if let Some(t) = read("adjectives.txt")? {
            self.adjectives = word_set(&t);
        }
        if let Some(t) = read("adverbs.txt")? {
            self.adverbs = word_set(&t);
        }
        if let Some(t) = read("verbs.tsv")? {
            self.verbs = tagged_words(&t)
                .into_iter()
                .map(|(w, t)| (w, Pos::from_ptb(&t)))
                .collect();
        }
        if let Some(t) = read("nouns.txt")? {
            self.nouns = word_set(&t);
        }
        if let Some(t) = read("gerund_exceptions.txt")? {
            self.gerund_exceptions = word_set(&t);
        }
        Ok(self)
    }

    pub fn set_gerund_exceptions<I: IntoIterator<Item = String>>(&mut self, words: I) {
        self.gerund_exceptions = words.into_iter().map(|w| w.to_lowercase()).collect();
    }

    pub fn is_gerund_exception(&self, word: &str) -> bool {
        self.gerund_exceptions.contains(word)
    }

    fn is_verb_base(&self, word: &str) -> bool {
        self.verbs.get(word) == Some(&Pos::Vb)
    }

    fn degree(&self, w: &str) -> Option<Pos> {
        match w {
            "better" | "worse" => return Some(Pos::Jjr),
            "best" | "worst" => return Some(Pos::Jjs),
            _ => {}
        }
        let (stem, pos) = if let Some(s) = w.strip_suffix("est") {
            (s, Pos::Jjs)
        } else if let Some(s) = w.strip_suffix("er") {
            (s, Pos::Jjr)
        } else {
            return None;
        };
        if stem.len() < 2 {
            return None;
        }
        let b = stem.as_bytes();
        let undoubled = (b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2]).then(|| &stem[..stem.len() - 1]);
        let found = self.adjectives.contains(stem)
            || self.adjectives.contains(&format!("{stem}e"))
            || undoubled.is_some_and(|u| self.adjectives.contains(u))
            || stem
                .strip_suffix('i')
                .is_some_and(|s| self.adjectives.contains(&format!("{s}y")));
        found.then_some(pos)
    }
}

const IRREGULAR_PLURALS: &[&str] = &["people", "children", "men", "women", "feet", "teeth", "mice", "geese"];

fn is_plural_form(w: &str) -> bool {
    IRREGULAR_PLURALS.contains(&w)
        || (w.len() > 3
            && w.ends_with('s')
            && !(w.ends_with("ss") || w.ends_with("us") || w.ends_with("is")))
}

/// Lexicon plus suffix-rule tagger.
///
/// Closed-class words come from the lexicon. `-ing` words are `VBG` unless
/// they are listed gerund exceptions or follow a determiner, in which case
/// they are `NN`. Unknown words fall back to suffix rules and finally `NN`.
#[derive(Debug, Clone, Default)]
pub struct RuleTagger {
    lexicon: Lexicon,
}

const SUBJECT_PRONOUNS: &[&str] = &["i", "you", "we", "they"];
const BE_OR_HAVE: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "being", "'s", "\u{2019}s", "'re", "am", "'m", "has",
    "have", "had", "'ve", "get", "got", "gets",
];
const ADJECTIVE_SUFFIXES: &[&str] = &[
    "able", "ible", "ful", "ous", "ive", "less", "ical", "ish", "ular", "ary", "proof",
];

impl RuleTagger {
    pub fn new(lexicon: Lexicon) -> Self {
        RuleTagger { lexicon }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn tag_at(&self, toks: &[Token], i: usize) -> Pos {
        let lex = &self.lexicon;
        let w = toks[i].lower.as_str();
        let prev = i.checked_sub(1).map(|p| &toks[p]);
        let prev_pos = prev.map(|t| t.pos);
        let prev_word = prev.map_or("", |t| t.lower.as_str());

        if !w.chars().any(char::is_alphabetic) {
            return Pos::Other;
        }
        if w == "'s" || w == "\u{2019}s" {
            let verbal = matches!(prev_pos, Some(Pos::Prp | Pos::Dt))
                || matches!(prev_word, "that" | "there" | "here" | "what" | "who" | "where");
            return if verbal { Pos::Vbz } else { Pos::Other };
        }
        if w == "like" {
            return if self.after_modal_or_to(toks, i) {
                Pos::Vb
            } else if matches!(prev_pos, Some(Pos::Prp | Pos::Nns | Pos::Rb))
                && !matches!(prev_word, "just" | "more" | "much")
            {
                Pos::Vbp
            } else {
                Pos::In
            };
        }
        if let Some(raw) = lex.closed.get(w) {
            if raw == "VBP" && self.after_modal_or_to(toks, i) {
                return Pos::Vb;
            }
            return Pos::from_ptb(raw);
        }
        if lex.gerund_exceptions.contains(w) {
            return Pos::Nn;
        }
        if let Some(&listed) = lex.verbs.get(w) {
            return self.resolve_verb(listed, toks, i);
        }
        if w.len() > 4 && w.ends_with("ing") {
            if lex.adjectives.contains(w) {
                return Pos::Jj;
            }
            if matches!(prev_pos, Some(Pos::Dt | Pos::PrpS)) {
                return Pos::Nn;
            }
            return Pos::Vbg;
        }
        if let Some(p) = lex.degree(w) {
            return p;
        }
        if lex.adjectives.contains(w) {
            return Pos::Jj;
        }
        if lex.adverbs.contains(w) {
            return Pos::Rb;
        }
        if lex.nouns.contains(w) {
            return if is_plural_form(w) { Pos::Nns } else { Pos::Nn };
        }
        if w.len() > 3
            && w.ends_with('s')
            && !(w.ends_with("ss") || w.ends_with("us") || w.ends_with("is") || w.ends_with("ous"))
        {
            let stem = &w[..w.len() - 1];
            let verb_stem = lex.is_verb_base(stem)
                || w.strip_suffix("es").is_some_and(|s| lex.is_verb_base(s))
                || w
                    .strip_suffix("ies")
                    .is_some_and(|s| lex.is_verb_base(&format!("{s}y")));
            let subject_before = matches!(prev_pos, Some(Pos::Prp | Pos::Nn | Pos::Nnp))
                && !SUBJECT_PRONOUNS.contains(&prev_word)
                || matches!(prev_word, "that" | "which" | "who");
            if verb_stem && subject_before {
                return Pos::Vbz;
            }
            return Pos::Nns;
        }
        if w.len() > 3 && w.ends_with("ly") {
            return Pos::Rb;
        }
        if w.len() > 4 && w.ends_with("ed") {
            if self.after_be_or_have(toks, i) {
                return Pos::Vbn;
            }
            if matches!(prev_pos, Some(Pos::Dt | Pos::PrpS | Pos::Rb | Pos::Jj)) {
                return Pos::Jj;
            }
            return Pos::Vbd;
        }
        if ADJECTIVE_SUFFIXES.iter().any(|s| w.len() > s.len() + 2 && w.ends_with(s)) {
            return Pos::Jj;
        }
        let capitalized = toks[i].surface.chars().next().is_some_and(char::is_uppercase);
        if capitalized && i > 0 && !matches!(prev_word, "." | "!" | "?" | "\"" | ":") {
            return Pos::Nnp;
        }
        Pos::Nn
    }

    fn resolve_verb(&self, listed: Pos, toks: &[Token], i: usize) -> Pos {
        let w = toks[i].lower.as_str();
        let prev = i.checked_sub(1).map(|p| &toks[p]);
        let prev_pos = prev.map(|t| t.pos);
        let prev_word = prev.map_or("", |t| t.lower.as_str());
        let is_noun = self.lexicon.nouns.contains(w);
        match listed {
            Pos::Vb => {
                if self.after_modal_or_to(toks, i) || matches!(prev_word, "n't" | "not" | "never") {
                    Pos::Vb
                } else if prev_pos == Some(Pos::Prp) && SUBJECT_PRONOUNS.contains(&prev_word) {
                    Pos::Vbp
                } else if is_noun
                    || matches!(
                        prev_pos,
                        Some(Pos::Dt | Pos::PrpS | Pos::Jj | Pos::Jjr | Pos::Jjs | Pos::In)
                    )
                {
                    if is_noun {
                        Pos::Nn
                    } else {
                        Pos::Vb
                    }
                } else if i == 0 {
                    Pos::Vb
                } else {
                    Pos::Vbp
                }
            }
            Pos::Vbd if self.after_be_or_have(toks, i) => Pos::Vbn,
            other => other,
        }
    }

    /// Previous non-adverb token is a modal or infinitival `to`.
    fn after_modal_or_to(&self, toks: &[Token], i: usize) -> bool {
        self.previous_non_adverb(toks, i).is_some_and(|t| {
            t.lower == "to"
                || matches!(self.lexicon.closed.get(t.lower.as_str()).map(String::as_str), Some("MD"))
        })
    }

    /// A form of be/have/get within two tokens, skipping adverbs.
    fn after_be_or_have(&self, toks: &[Token], i: usize) -> bool {
        toks[..i]
            .iter()
            .rev()
            .take(3)
            .take_while(|t| t.pos == Pos::Rb || BE_OR_HAVE.contains(&t.lower.as_str()))
            .any(|t| BE_OR_HAVE.contains(&t.lower.as_str()))
    }

    fn previous_non_adverb<'a>(&self, toks: &'a [Token], i: usize) -> Option<&'a Token> {
        toks[..i].iter().rev().take(3).find(|t| t.pos != Pos::Rb)
    }
}

impl Tagger for RuleTagger {
    fn tag(&self, tokens: &mut [Token]) {
        for i in 0..tokens.len() {
            tokens[i].pos = self.tag_at(tokens, i);
        }
        // Degree words in front of an adjective or adverb act as adverbs.
        for i in 0..tokens.len().saturating_sub(1) {
            if matches!(tokens[i].lower.as_str(), "pretty" | "super" | "extra" | "real")
                && matches!(tokens[i + 1].pos, Pos::Jj | Pos::Rb | Pos::Jjr)
            {
                tokens[i].pos = Pos::Rb;
            }
        }
    }
}
