//! The scoring network: span representations, mention, coarse and fine
//! scores, type prediction and the consistency penalties that tie the two
//! together.

mod file;
mod forward;
mod hyperparams;
mod params;
mod scoring;

pub use file::{from_bytes, load, save, to_bytes, MODEL_MAGIC, MODEL_VERSION};
pub use forward::{span_representation, AnaphorGraph, Dropout, Network, PairVars};
pub use hyperparams::{Hyperparams, KEYS};
pub use params::{
    distance_slots, fine_input_dim, width_bucket, FeatureTables, FfnnLayout, Layout, ModelParams,
    Tensor, WIDTH_BUCKETS,
};
pub use scoring::{
    antecedent_distribution, distance_penalty, length_penalty, score_dummy, score_pair,
    select_antecedent, PairComponents, ScoreBreakdown, ScoreEntry, TypeLabel, TypePrediction,
};

use std::path::Path;

use crate::candidates::{extract_candidate_anaphors, AnaphorLexicon};
use crate::corpus::{Document, FilterLexicon, SpanRef};
use crate::embeddings::Matrix;
use crate::error::Result;
use crate::features::DocumentFeatures;
use crate::tape::Tape;

/// Trained parameters plus everything needed to apply them to new text.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub hp: Hyperparams,
    pub params: ModelParams,
    pub anaphor_lexicon: AnaphorLexicon,
    pub filter_lexicon: FilterLexicon,
}

/// Scores of one candidate anaphor.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredAnaphor {
    pub anaphor: SpanRef,
    pub breakdown: ScoreBreakdown,
}

impl Model {
    /// Freshly initialised parameters seeded by `hp.seed`.
    pub fn new(
        hp: Hyperparams,
        anaphor_lexicon: AnaphorLexicon,
        filter_lexicon: FilterLexicon,
    ) -> Self {
        let params = ModelParams::init(&hp, hp.seed);
        Model {
            hp,
            params,
            anaphor_lexicon,
            filter_lexicon,
        }
    }

    /// Score breakdown for every candidate anaphor of `doc`, in span order.
    pub fn score_document(&self, doc: &Document, emb: &Matrix) -> Result<Vec<ScoredAnaphor>> {
        let feats = DocumentFeatures::new(doc, &self.filter_lexicon);
        let mut tape = Tape::new(self.params.data());
        let mut net = Network::new(&self.params, &self.hp, doc, emb, None)?;
        Ok(extract_candidate_anaphors(doc, &self.anaphor_lexicon)
            .into_iter()
            .map(|x| {
                let graph = net.anaphor(&mut tape, &feats, x);
                ScoredAnaphor {
                    anaphor: x,
                    breakdown: graph.breakdown(&tape, doc, &self.hp),
                }
            })
            .collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save(self, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        load(path)
    }
}
