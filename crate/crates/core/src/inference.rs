//! Resolving documents with a trained model and writing the predictions.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{write_corpus, AnnotatedDocument, Clustering, Document, Mention, SpanRef};
use crate::embeddings::{EmbeddingProvider, Matrix};
use crate::error::Result;
use crate::model::{select_antecedent, Model};

/// One candidate anaphor and its chosen antecedent utterance (`None` for the dummy).
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedAnaphor {
    pub anaphor: SpanRef,
    pub antecedent: Option<usize>,
    /// Distribution over the dummy then the candidate utterances, ascending.
    pub probabilities: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub doc_id: String,
    pub anaphors: Vec<ResolvedAnaphor>,
    pub clustering: Clustering,
}

impl Prediction {
    /// Resolved (non-dummy) links.
    pub fn links(&self) -> impl Iterator<Item = (SpanRef, usize)> + '_ {
        self.anaphors
            .iter()
            .filter_map(|a| a.antecedent.map(|y| (a.anaphor, y)))
    }
}

/// Smallest-index representative union-find over mention indices.
struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

/// Joins every `(anaphor, utterance)` link into clusters; unlinked anaphors appear nowhere.
///
/// Clusters are sorted internally and by their first mention, so the result
/// does not depend on link order.
pub fn clusters_from_links(
    doc: &Document,
    links: impl IntoIterator<Item = (SpanRef, usize)>,
) -> Clustering {
    let mut ids: BTreeMap<Mention, usize> = BTreeMap::new();
    let mut pairs = Vec::new();
    for (x, y) in links {
        let next = ids.len();
        let a = *ids.entry(Mention::anaphor(x)).or_insert(next);
        let next = ids.len();
        let u = *ids.entry(Mention::utterance(doc, y)).or_insert(next);
        pairs.push((a, u));
    }
    let mut sets = DisjointSets::new(ids.len());
    for (a, u) in pairs {
        sets.union(a, u);
    }
    let mut groups: BTreeMap<usize, Vec<Mention>> = BTreeMap::new();
    for (m, i) in &ids {
        let root = sets.find(*i);
        groups.entry(root).or_default().push(*m);
    }
    let mut clusters: Vec<Vec<Mention>> = groups.into_values().collect();
    for c in &mut clusters {
        c.sort();
    }
    clusters.sort();
    Clustering::new(doc.doc_id.clone(), clusters)
}

pub fn resolve_document(
    model: &Model,
    doc: &Document,
    emb: &dyn EmbeddingProvider,
) -> Result<Prediction> {
    resolve_with_matrix(model, doc, &emb.embed(doc)?)
}

/// As [`resolve_document`], with the token embeddings already computed.
pub fn resolve_with_matrix(model: &Model, doc: &Document, matrix: &Matrix) -> Result<Prediction> {
    let scored = model.score_document(doc, matrix)?;
    let anaphors: Vec<ResolvedAnaphor> = scored
        .into_iter()
        .map(|s| {
            let antecedent = select_antecedent(&s.breakdown.entries);
            if let Some(y) = antecedent {
                assert!(
                    s.anaphor.utt - y <= model.hp.window,
                    "link from {} to utterance {y} exceeds the window",
                    s.anaphor
                );
            }
            ResolvedAnaphor {
                anaphor: s.anaphor,
                antecedent,
                probabilities: s.breakdown.probabilities,
            }
        })
        .collect();
    let clustering = clusters_from_links(
        doc,
        anaphors
            .iter()
            .filter_map(|a| a.antecedent.map(|y| (a.anaphor, y))),
    );
    Ok(Prediction {
        doc_id: doc.doc_id.clone(),
        anaphors,
        clustering,
    })
}

/// Resolves every document; with `jobs > 1` documents run on a rayon pool.
pub fn resolve_corpus(
    model: &Model,
    docs: &[AnnotatedDocument],
    emb: &dyn EmbeddingProvider,
    jobs: usize,
) -> Result<Vec<Prediction>> {
    if jobs <= 1 {
        return docs
            .iter()
            .map(|d| resolve_document(model, &d.document, emb))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| crate::Error::Invalid(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| {
        docs.par_iter()
            .map(|d| resolve_document(model, &d.document, emb))
            .collect()
    })
}

/// Documents carrying predicted clusters in place of any gold annotation.
pub fn predicted_corpus(
    docs: &[AnnotatedDocument],
    predictions: &[Prediction],
) -> Vec<AnnotatedDocument> {
    docs.iter()
        .zip(predictions)
        .map(|(d, p)| {
            debug_assert_eq!(d.doc_id(), p.doc_id);
            AnnotatedDocument {
                document: d.document.clone(),
                clusters: Some(p.clustering.clone()),
            }
        })
        .collect()
}

/// Writes predictions as JSON-lines records in the corpus format.
pub fn write_predictions(
    docs: &[AnnotatedDocument],
    predictions: &[Prediction],
    path: impl AsRef<Path>,
) -> Result<()> {
    write_corpus(path, &predicted_corpus(docs, predictions))
}
