//! Discourse deixis resolution for dialogue.
//!
//! Resolves deictic anaphors ("that", "this", "it", ...) to the utterances
//! they refer to with a span-ranking model restricted to utterance
//! antecedents, and scores the output with MUC, B³, CEAF_e and the CoNLL
//! average.

pub mod candidates;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod features;
pub mod inference;
pub mod model;
pub mod scorer;
pub mod synth;
pub mod tape;
pub mod training;

pub use error::{Error, Result};
