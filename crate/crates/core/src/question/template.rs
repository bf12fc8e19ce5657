use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ElicitationQuestion, Provenance, QuestionError, QuestionFlag, QuestionLabel};
use crate::corpus::normalize_category;
use crate::select::{ActivityMention, CandidateSentence};
use crate::text::{tokenize, Pos, RuleTagger, Sentence, Tagger};

pub const DEFAULT_TEMPLATES: &[&str] = &[
    "Are you looking for a {cat} that's {pred}?",
    "Would you be interested in a {cat} that is {pred}?",
    "Are you interested in a {cat} {clause}?",
    "Do you want a {cat} that's {pred}?",
    "Would you like a {cat} that is {pred}?",
];

pub const DEFAULT_GENERIC_STOPLIST: &[&str] = &[
    "doing", "using", "working", "getting", "making", "job", "work", "thing", "things", "stuff", "it",
    "product", "item",
];

const CATEGORY_NOUNS: &[(&str, &str)] = &[
    ("Backpacking Packs", "backpacking pack"),
    ("Tents", "tent"),
    ("Bikes", "bike"),
    ("Jackets", "jacket"),
    ("Vacuums", "vacuum"),
    ("Blenders", "blender"),
    ("Espresso Machines", "espresso machine"),
    ("Grills", "grill"),
    ("Walk-Behind Lawn Mowers", "lawn mower"),
    ("Birdhouses", "birdhouse"),
    ("Feeders", "feeder"),
    ("Snow Shovels", "snow shovel"),
];

const EVALUATIVE: &[&str] = &[
    "great", "perfect", "good", "ideal", "excellent", "nice", "awesome", "fantastic", "wonderful",
    "fine", "suitable", "best", "better", "amazing", "terrific", "superb", "handy", "useful", "fun",
];

const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "it", "its", "my", "your", "our", "their",
    "his", "her", "them", "they", "you", "we", "i", "me", "us", "him", "some", "any", "all", "every",
    "each", "certain", "many", "much", "more", "most", "few", "several", "lot", "lots", "of", "for",
    "to", "in", "on", "at", "with", "by", "from", "into", "onto", "about", "over", "under", "up",
    "down", "out", "off", "as", "and", "or", "but", "so", "than", "then", "just", "very", "really",
    "also", "too", "other", "another", "such", "own", "same", "is", "are", "was", "be", "been",
    "being", "am", "'s", "do", "does", "did", "can", "could", "will", "would", "should", "may",
    "might", "must", "not", "no", "n't", "there", "here", "what", "which", "who", "when", "where",
    "how", "around", "while", "etc", "etc.",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "index")]
pub enum TemplateChoice {
    /// Zero-based index into the template list.
    Fixed(usize),
    /// Index drawn from the seed and the sentence id.
    Seeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateConfig {
    pub templates: Vec<String>,
    pub stoplist: HashSet<String>,
    pub category_nouns: HashMap<String, String>,
    /// Replacements applied to the evaluative head of a predicate.
    pub softening: HashMap<String, String>,
    pub choice: TemplateChoice,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        TemplateConfig {
            templates: DEFAULT_TEMPLATES.iter().map(|s| s.to_string()).collect(),
            stoplist: DEFAULT_GENERIC_STOPLIST.iter().map(|s| s.to_string()).collect(),
            category_nouns: CATEGORY_NOUNS
                .iter()
                .map(|(c, n)| (normalize_category(c), n.to_string()))
                .collect(),
            softening: HashMap::new(),
            choice: TemplateChoice::Fixed(0),
        }
    }
}

impl TemplateConfig {
    pub fn with_category_noun(mut self, category: &str, noun: &str) -> Self {
        self.category_nouns.insert(normalize_category(category), noun.to_lowercase());
        self
    }
}

fn default_tagger() -> &'static RuleTagger {
    static TAGGER: OnceLock<RuleTagger> = OnceLock::new();
    TAGGER.get_or_init(RuleTagger::default)
}

fn singular(w: &str) -> &str {
    if w.ends_with("ss") {
        return w;
    }
    w.strip_suffix("es")
        .filter(|s| s.ends_with("sh") || s.ends_with("ch") || s.ends_with('x'))
        .or_else(|| w.strip_suffix('s'))
        .unwrap_or(w)
}

/// Singular lowercase noun naming an item of `category`.
pub fn category_noun(category: &str, config: &TemplateConfig) -> Result<String, QuestionError> {
    if let Some(n) = config.category_nouns.get(&normalize_category(category)) {
        return Ok(n.clone());
    }
    let words: Vec<&str> = category.split_whitespace().collect();
    let plain = |w: &&str| w.chars().all(char::is_alphabetic);
    if words.is_empty() || !words.iter().all(plain) {
        return Err(QuestionError::UnmappableCategory(category.to_string()));
    }
    let mut out: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
    let last = out.pop().unwrap_or_default();
    out.push(singular(&last).to_string());
    Ok(out.join(" "))
}

/// Rebuilds the sentence text of tokens `from..=to`, rewriting first-person
/// possessives to second person and lowercasing the first token.
fn render_span(sentence: &Sentence, from: usize, to: usize) -> String {
    let toks = &sentence.tokens;
    let mut out = String::new();
    let mut cursor = toks[from].offset;
    for (k, t) in toks[from..=to].iter().enumerate() {
        out.push_str(&sentence.text[cursor..t.offset]);
        match t.lower.as_str() {
            "my" | "our" => out.push_str(if t.surface.starts_with(char::is_uppercase) && k > 0 {
                "Your"
            } else {
                "your"
            }),
            _ if k == 0 => out.push_str(&t.lower),
            _ => out.push_str(&t.surface),
        }
        cursor = t.end();
    }
    out
}

fn clause_end(sentence: &Sentence, start: usize) -> usize {
    sentence.tokens[start..]
        .iter()
        .rposition(|t| t.surface.chars().any(char::is_alphanumeric))
        .map_or(start, |p| start + p)
}

/// Usage clause of a mention, from "for" to the end, possessives rewritten.
pub fn mentioned_clause(sentence: &Sentence, mention: &ActivityMention) -> String {
    render_span(sentence, mention.prep_index, clause_end(sentence, mention.prep_index))
}

fn is_evaluative(t: &crate::text::Token) -> bool {
    t.pos.is_adjective() || EVALUATIVE.contains(&t.lower.as_str())
}

/// Predicate of a usage question: the evaluative word closest before
/// "for" through the end of the clause, e.g. "great for making smoothies".
/// Without such a word the predicate is "good " plus the clause.
pub fn extract_predicate(
    sentence: &Sentence,
    mention: &ActivityMention,
    softening: &HashMap<String, String>,
) -> String {
    let toks = &sentence.tokens;
    let p = mention.prep_index;
    let end = clause_end(sentence, p);
    let head = match p {
        0 => None,
        _ if is_evaluative(&toks[p - 1]) => Some(p - 1),
        _ if p >= 2
            && is_evaluative(&toks[p - 2])
            && matches!(toks[p - 1].pos, Pos::Nn | Pos::Nns | Pos::Rb) =>
        {
            Some(p - 2)
        }
        _ => None,
    };
    match head {
        Some(h) => {
            let text = render_span(sentence, h, end);
            match softening.get(&toks[h].lower) {
                Some(soft) => format!("{soft}{}", &text[toks[h].lower.len()..]),
                None => text,
            }
        }
        None => format!("good {}", mentioned_clause(sentence, mention)),
    }
}

fn is_function_word(w: &str) -> bool {
    FUNCTION_WORDS.contains(&w)
}

/// Whether the usage named by `predicate` is too vague to ask about: every
/// content word after the first "for" is in `stoplist`.
pub fn is_generic(predicate: &str, stoplist: &HashSet<String>) -> bool {
    let toks = tokenize(predicate);
    let start = toks.iter().position(|t| t.lower == "for").map_or(0, |i| i + 1);
    toks[start..]
        .iter()
        .filter(|t| t.lower.chars().any(char::is_alphabetic))
        .filter(|t| !is_function_word(&t.lower))
        .all(|t| stoplist.contains(&t.lower))
}

/// Whether `predicate` asks about two or more activities: at least two
/// progressive verbs each introduced by "for", "or", "and", "or for" or
/// "and for".
pub fn is_complex(predicate: &str) -> bool {
    let mut toks = tokenize(predicate);
    default_tagger().tag(&mut toks);
    let heads = (1..toks.len())
        .filter(|&i| toks[i].pos == Pos::Vbg)
        .filter(|&i| matches!(toks[i - 1].lower.as_str(), "for" | "or" | "and"))
        .count();
    heads >= 2
}

fn category_forms(noun: &str) -> impl Iterator<Item = String> + '_ {
    noun.split_whitespace().flat_map(|w| {
        let mut v = vec![w.to_string(), format!("{w}s"), format!("{w}ing")];
        if let Some(stem) = w.strip_suffix('e') {
            v.push(format!("{stem}ing"));
        }
        if let Some(stem) = w.strip_suffix("er") {
            v.push(format!("{stem}ing"));
        }
        v
    })
}

fn template_index(config: &TemplateConfig, sentence: &Sentence, seed: u64) -> Result<usize, QuestionError> {
    let n = config.templates.len();
    match config.choice {
        TemplateChoice::Fixed(i) if i < n => Ok(i),
        TemplateChoice::Fixed(i) => Err(QuestionError::TemplateIndex(i)),
        TemplateChoice::Seeded => {
            let mut h: u64 = 0xcbf2_9ce4_8422_2325;
            for b in sentence.source_review_id.bytes().chain(sentence.index_in_review.to_le_bytes()) {
                h = (h ^ u64::from(b)).wrapping_mul(0x100_0000_01b3);
            }
            Ok(ChaCha8Rng::seed_from_u64(seed ^ h).gen_range(0..n))
        }
    }
}

fn fill(template: &str, noun: &str, predicate: &str, clause: &str) -> String {
    let vowel = noun.starts_with(['a', 'e', 'i', 'o', 'u']);
    let template = if vowel {
        template.replace("a {cat}", "an {cat}")
    } else {
        template.to_string()
    };
    template
        .replace("{cat}", noun)
        .replace("{pred}", predicate)
        .replace("{clause}", clause)
}

/// Question for `candidate` from the template list, or N/A when every
/// usage it mentions is generic.
pub fn generate_template(
    candidate: &CandidateSentence,
    config: &TemplateConfig,
    seed: u64,
) -> Result<QuestionLabel, QuestionError> {
    if config.templates.is_empty() {
        return Err(QuestionError::NoTemplates);
    }
    if candidate.activities.is_empty() {
        return Err(QuestionError::NoActivity);
    }
    let noun = category_noun(&candidate.category, config)?;
    let mut stoplist = config.stoplist.clone();
    stoplist.extend(category_forms(&noun));
    let sentence = &candidate.sentence;
    let chosen = candidate.activities.iter().find_map(|m| {
        let predicate = extract_predicate(sentence, m, &config.softening);
        (!is_generic(&predicate, &stoplist)).then_some((m, predicate))
    });
    let Some((mention, predicate)) = chosen else {
        return Ok(QuestionLabel::NotApplicable);
    };
    let clause = mentioned_clause(sentence, mention);
    let index = template_index(config, sentence, seed)?;
    let text = fill(&config.templates[index], &noun, &predicate, &clause);
    let mut flags = Vec::new();
    if is_complex(&predicate) {
        flags.push(QuestionFlag::Complex);
    }
    Ok(QuestionLabel::Question(ElicitationQuestion {
        text,
        category: candidate.category.clone(),
        review_id: sentence.source_review_id.clone(),
        sentence_index: sentence.index_in_review,
        usage_clause: clause,
        provenance: Provenance::Template,
        flags,
    }))
}

/// Flags for a question produced outside the template engine, judged from
/// the text after its first "for".
pub(crate) fn external_flags(text: &str, category_noun: Option<&str>) -> Vec<QuestionFlag> {
    let body = text.trim_end_matches('?');
    let mut flags = Vec::new();
    if let Some(at) = body.find(" for ") {
        let mut stoplist: HashSet<String> = DEFAULT_GENERIC_STOPLIST.iter().map(|s| s.to_string()).collect();
        if let Some(n) = category_noun {
            stoplist.extend(category_forms(n));
        }
        if is_generic(&body[at..], &stoplist) {
            flags.push(QuestionFlag::Generic);
        }
        if is_complex(&body[at..]) {
            flags.push(QuestionFlag::Complex);
        }
    }
    flags
}
