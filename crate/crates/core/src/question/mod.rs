//! Turning candidate sentences into yes/no elicitation questions.

mod adapter;
mod template;

pub use adapter::{
    generate_external, generate_external_batch, request_line, AdapterError, HttpAdapter, ProcessAdapter,
    QuestionAdapter, DEFAULT_IN_FLIGHT,
};
pub use template::{
    category_noun, extract_predicate, generate_template, is_complex, is_generic, mentioned_clause,
    TemplateChoice, TemplateConfig, DEFAULT_GENERIC_STOPLIST, DEFAULT_TEMPLATES,
};

use serde::{Deserialize, Serialize};

/// Sentinel a generator returns for sentences that cannot become a
/// question.
pub const NA: &str = "N/A";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Template,
    ExternalModel,
    Human,
    Paraphrase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionFlag {
    Generic,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElicitationQuestion {
    pub text: String,
    pub category: String,
    pub review_id: String,
    pub sentence_index: u32,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub usage_clause: String,
    pub provenance: Provenance,
    #[serde(default)]
    pub flags: Vec<QuestionFlag>,
}

impl ElicitationQuestion {
    pub fn has_flag(&self, flag: QuestionFlag) -> bool {
        self.flags.contains(&flag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuestionLabel {
    NotApplicable,
    Question(ElicitationQuestion),
}

impl QuestionLabel {
    pub fn is_na(&self) -> bool {
        matches!(self, QuestionLabel::NotApplicable)
    }

    pub fn text(&self) -> &str {
        match self {
            QuestionLabel::NotApplicable => NA,
            QuestionLabel::Question(q) => &q.text,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum QuestionError {
    #[error("no question noun known for category {0:?}")]
    UnmappableCategory(String),
    #[error("template list is empty")]
    NoTemplates,
    #[error("template index {0} out of range")]
    TemplateIndex(usize),
    #[error("candidate has no activity mention")]
    NoActivity,
}

/// One line of a generated-questions file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedRecord {
    pub id: String,
    pub review_id: String,
    pub sentence_index: u32,
    pub category: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<QuestionFlag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Record id used across generated, candidate and dataset files.
pub fn record_id(review_id: &str, sentence_index: u32) -> String {
    format!("{review_id}#{sentence_index}")
}

impl GeneratedRecord {
    pub fn from_label(review_id: &str, sentence_index: u32, category: &str, label: &QuestionLabel) -> Self {
        let (provenance, flags) = match label {
            QuestionLabel::NotApplicable => (None, Vec::new()),
            QuestionLabel::Question(q) => (Some(q.provenance), q.flags.clone()),
        };
        GeneratedRecord {
            id: record_id(review_id, sentence_index),
            review_id: review_id.to_string(),
            sentence_index,
            category: category.to_string(),
            label: label.text().to_string(),
            provenance,
            flags,
            error: None,
        }
    }

    pub fn from_error(review_id: &str, sentence_index: u32, category: &str, error: &AdapterError) -> Self {
        GeneratedRecord {
            id: record_id(review_id, sentence_index),
            review_id: review_id.to_string(),
            sentence_index,
            category: category.to_string(),
            label: String::new(),
            provenance: None,
            flags: Vec::new(),
            error: Some(error.to_string()),
        }
    }

    pub fn is_na(&self) -> bool {
        self.error.is_none() && self.label == NA
    }
}
