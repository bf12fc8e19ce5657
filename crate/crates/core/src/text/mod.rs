//! Sentence splitting, tokenization and part-of-speech tagging.
//!
//! Everything here is a pure function of its input so sentences can be
//! processed independently on any thread.

mod segment;
mod tagger;
mod token;

pub use segment::{sentence_spans, split_sentences, Abbreviations};
pub use tagger::{Lexicon, RuleTagger, Tagger};
pub use token::{tokenize, Pos, Token};

use serde::{Deserialize, Serialize};

/// A sentence of a review together with its tagged tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub source_review_id: String,
    pub index_in_review: u32,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Tokenizes and tags `text` as a standalone sentence.
    pub fn analyze(
        review_id: impl Into<String>,
        index_in_review: u32,
        text: impl Into<String>,
        tagger: &dyn Tagger,
    ) -> Self {
        let text = text.into();
        let mut tokens = tokenize(&text);
        tagger.tag(&mut tokens);
        Sentence {
            source_review_id: review_id.into(),
            index_in_review,
            text,
            tokens,
        }
    }

    /// Stable identifier used for ordering and sampling.
    pub fn stable_id(&self) -> (&str, u32) {
        (&self.source_review_id, self.index_in_review)
    }
}
