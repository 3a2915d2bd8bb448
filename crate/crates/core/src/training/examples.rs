//! Gold targets for every candidate anaphor of the training corpus.

use std::collections::{BTreeSet, HashMap};

use log::debug;

use crate::candidates::{extract_candidate_anaphors, AnaphorLexicon};
use crate::corpus::{AnnotatedDocument, SpanRef};
use crate::error::{Error, Result};
use crate::model::{Hyperparams, TypeLabel};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnaphorExample {
    pub span: SpanRef,
    pub label: TypeLabel,
    /// Correct choices: utterance indices, or `None` for the dummy. Never empty.
    pub targets: Vec<Option<usize>>,
}

impl AnaphorExample {
    /// Positions of the targets in a score vector laid out as dummy, then
    /// candidate utterances from `first_candidate` upward.
    pub fn target_positions(&self, first_candidate: usize) -> Vec<usize> {
        self.targets
            .iter()
            .map(|t| t.map_or(0, |y| 1 + y - first_candidate))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingExample {
    /// Position of the document in the corpus the examples were built from.
    pub doc_index: usize,
    pub anaphors: Vec<AnaphorExample>,
}

/// Counts gathered while labelling.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExampleStats {
    pub candidates: usize,
    pub positives: usize,
    pub gold_anaphors: usize,
    /// Gold anaphors that no lexicon entry matches; a ceiling on recall.
    pub lexicon_misses: usize,
    /// Positive candidates whose antecedents all fall outside the window.
    pub out_of_window: usize,
}

/// Labels every candidate: anaphor iff its span is exactly a gold anaphor.
pub fn make_training_examples(
    corpus: &[AnnotatedDocument],
    lexicon: &AnaphorLexicon,
    hp: &Hyperparams,
) -> Result<(Vec<TrainingExample>, ExampleStats)> {
    let mut stats = ExampleStats::default();
    let mut examples = Vec::with_capacity(corpus.len());
    for (doc_index, d) in corpus.iter().enumerate() {
        let gold = d.clusters.as_ref().ok_or_else(|| {
            Error::validation(d.doc_id(), "training document has no gold clusters")
        })?;
        let mut antecedents: HashMap<SpanRef, Vec<usize>> = HashMap::new();
        for cluster in &gold.clusters {
            let utts: Vec<usize> = cluster
                .iter()
                .filter(|m| !m.is_anaphor())
                .map(|m| m.span.utt)
                .collect();
            for a in cluster.iter().filter(|m| m.is_anaphor()) {
                antecedents.insert(a.span, utts.clone());
            }
        }
        let candidates = extract_candidate_anaphors(&d.document, lexicon);
        let found: BTreeSet<SpanRef> = candidates.iter().copied().collect();
        stats.gold_anaphors += antecedents.len();
        stats.lexicon_misses += antecedents.keys().filter(|s| !found.contains(s)).count();

        let anaphors = candidates
            .into_iter()
            .map(|x| {
                stats.candidates += 1;
                let Some(utts) = antecedents.get(&x) else {
                    return AnaphorExample {
                        span: x,
                        label: TypeLabel::NonAnaphor,
                        targets: vec![None],
                    };
                };
                stats.positives += 1;
                let mut targets: Vec<Option<usize>> = utts
                    .iter()
                    .copied()
                    .filter(|&y| y <= x.utt && x.utt - y <= hp.window)
                    .map(Some)
                    .collect();
                targets.sort();
                targets.dedup();
                if targets.is_empty() {
                    stats.out_of_window += 1;
                    debug!(
                        "{}: every antecedent of {x} is outside the window",
                        d.doc_id()
                    );
                    targets.push(None);
                }
                AnaphorExample {
                    span: x,
                    label: TypeLabel::Anaphor,
                    targets,
                }
            })
            .collect();
        examples.push(TrainingExample {
            doc_index,
            anaphors,
        });
    }
    Ok((examples, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Clustering, Document, Mention, Token};

    fn corpus(antecedent: usize) -> Vec<AnnotatedDocument> {
        let utts = (0..14)
            .map(|i| {
                let text = if i == 13 {
                    "so that is settled"
                } else {
                    "we need that thing"
                };
                (
                    "A".to_string(),
                    text.split(' ').map(|w| Token::new(w, None)).collect(),
                )
            })
            .collect();
        let doc = Document::new("d", utts);
        let cluster = vec![
            Mention::anaphor(SpanRef::new(13, 1, 1)),
            Mention::utterance(&doc, antecedent),
        ];
        vec![AnnotatedDocument {
            clusters: Some(Clustering::new("d", vec![cluster])),
            document: doc,
        }]
    }

    #[test]
    fn gold_match_labels_and_targets() {
        let (ex, stats) = make_training_examples(
            &corpus(9),
            &AnaphorLexicon::from_forms(["that"]),
            &Hyperparams::default(),
        )
        .unwrap();
        let anaphors = &ex[0].anaphors;
        assert_eq!(anaphors.len(), 14);
        let pos = anaphors
            .iter()
            .find(|a| a.label == TypeLabel::Anaphor)
            .unwrap();
        assert_eq!(pos.span, SpanRef::new(13, 1, 1));
        assert_eq!(pos.targets, vec![Some(9)]);
        assert_eq!(pos.target_positions(3), vec![7]);
        let neg = &anaphors[0];
        assert_eq!(
            (neg.label, neg.targets.clone()),
            (TypeLabel::NonAnaphor, vec![None])
        );
        assert_eq!(neg.target_positions(0), vec![0]);
        assert_eq!(
            (stats.positives, stats.out_of_window, stats.lexicon_misses),
            (1, 0, 0)
        );
    }

    #[test]
    fn antecedent_beyond_window_targets_dummy() {
        let (ex, stats) = make_training_examples(
            &corpus(1),
            &AnaphorLexicon::from_forms(["that"]),
            &Hyperparams::default(),
        )
        .unwrap();
        let pos = ex[0]
            .anaphors
            .iter()
            .find(|a| a.label == TypeLabel::Anaphor)
            .unwrap();
        assert_eq!(pos.targets, vec![None]);
        assert_eq!(stats.out_of_window, 1);
    }

    #[test]
    fn lexicon_misses_are_counted() {
        let (ex, stats) = make_training_examples(
            &corpus(9),
            &AnaphorLexicon::from_forms(["thing"]),
            &Hyperparams::default(),
        )
        .unwrap();
        assert!(ex[0]
            .anaphors
            .iter()
            .all(|a| a.label == TypeLabel::NonAnaphor));
        assert_eq!((stats.gold_anaphors, stats.lexicon_misses), (1, 1));
    }
}
