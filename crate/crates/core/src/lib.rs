//! Mining usage-related preference-elicitation questions from product
//! reviews, and evaluating question generators.

pub mod aspect;
pub mod corpus;
pub mod dataset;
pub mod eval;
pub mod exec;
pub mod pipeline;
pub mod question;
pub mod select;
pub mod store;
pub mod synth;
pub mod text;
