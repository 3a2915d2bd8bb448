//! Evaluation: MUC, B³, CEAF_e and their CoNLL average, anaphor recognition,
//! and per-form and per-distance breakdowns.

mod hungarian;
mod metrics;
mod report;

pub use hungarian::max_weight_assignment;
pub use metrics::{b_cubed, ceaf_alignment, ceaf_e, muc, phi4, CorefCounts, Counts, Prf};
pub use report::{
    link_distance_bin, score_corpus, score_documents, DistanceRow, FormGrouping, FormRow,
    RecognitionConvention, ScoreOptions, ScoreReport, DISTANCE_BINS,
};

use std::collections::BTreeSet;

use crate::corpus::{Clustering, SpanRef};

/// CoNLL counts of a single document pair.
pub fn conll_counts(gold: &Clustering, sys: &Clustering) -> CorefCounts {
    CorefCounts::compute(&gold.clusters, &sys.clusters)
}

/// Anaphor spans under a recognition convention.
pub fn anaphor_spans(c: &Clustering, convention: RecognitionConvention) -> BTreeSet<SpanRef> {
    match convention {
        RecognitionConvention::Marked => c.anaphors().map(|m| m.span).collect(),
        RecognitionConvention::AllButFirst => c
            .clusters
            .iter()
            .flat_map(|cluster| {
                let mut spans: Vec<SpanRef> = cluster.iter().map(|m| m.span).collect();
                spans.sort();
                spans.into_iter().skip(1)
            })
            .collect(),
    }
}

/// Recognition counts: correct, predicted, gold.
pub fn recognition_counts(
    gold: &Clustering,
    sys: &Clustering,
    convention: RecognitionConvention,
) -> Counts {
    let g = anaphor_spans(gold, RecognitionConvention::Marked);
    let s = anaphor_spans(sys, convention);
    let correct = g.intersection(&s).count() as f64;
    Counts {
        precision_num: correct,
        precision_den: s.len() as f64,
        recall_num: correct,
        recall_den: g.len() as f64,
    }
}
