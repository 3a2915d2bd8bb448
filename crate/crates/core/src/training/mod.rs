//! Joint training of the resolver and the type predictor, gradient checking
//! and hyperparameter search.

mod adam;
mod examples;
mod gradcheck;
mod grid;
mod loss;

pub use adam::Adam;
pub use examples::{make_training_examples, AnaphorExample, ExampleStats, TrainingExample};
pub use gradcheck::{
    central_difference, gradient_check, relative_error, resolution_floor, GradientCheck,
    RESOLUTION_FACTOR,
};
pub use grid::{grid_search, Grid, GridResult, GridRow};
pub use loss::{document_loss, joint_loss, DocumentLoss, LossInput, LossReport};

use std::fmt;
use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::candidates::AnaphorLexicon;
use crate::corpus::{AnnotatedDocument, FilterLexicon};
use crate::embeddings::{EmbeddingProvider, Matrix};
use crate::error::{Error, Result};
use crate::inference::resolve_with_matrix;
use crate::model::{Dropout, Hyperparams, Model, ModelParams};
use crate::scorer::{score_documents, ScoreOptions};

/// One line of the training log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Training loss accumulated during the epoch, with dropout active.
    pub loss: LossReport,
    pub dev_conll: f64,
    pub seconds: f64,
}

impl fmt::Display for EpochLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "epoch {:>3}\tres {:.6}\ttype {:.6}\ttotal {:.6}\tdev_conll {:.4}\ttime {:.2}s",
            self.epoch,
            self.loss.resolution_loss,
            self.loss.type_loss,
            self.loss.total,
            self.dev_conll,
            self.seconds
        )
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the best dev epoch, rounded to file precision.
    pub model: Model,
    pub log: Vec<EpochLog>,
    /// 0 when no epoch ran and the untrained model was kept.
    pub best_epoch: usize,
    pub best_dev_conll: f64,
    pub stats: ExampleStats,
    /// Gold anaphor forms left out of the lexicon for being too wide.
    pub excluded_forms: Vec<String>,
}

fn embed_all(docs: &[AnnotatedDocument], emb: &dyn EmbeddingProvider) -> Result<Vec<Matrix>> {
    docs.iter().map(|d| emb.embed(&d.document)).collect()
}

/// Dev CoNLL of `model` on documents whose embeddings are already computed.
pub fn evaluate(model: &Model, docs: &[AnnotatedDocument], matrices: &[Matrix]) -> Result<f64> {
    let mut predicted = Vec::with_capacity(docs.len());
    for (d, m) in docs.iter().zip(matrices) {
        predicted.push(resolve_with_matrix(model, &d.document, m)?.clustering);
    }
    let gold: Vec<_> = docs
        .iter()
        .map(|d| {
            d.clusters
                .as_ref()
                .ok_or_else(|| Error::validation(d.doc_id(), "dev document has no gold clusters"))
        })
        .collect::<Result<_>>()?;
    let triples: Vec<_> = docs
        .iter()
        .zip(&gold)
        .zip(&predicted)
        .map(|((d, g), p)| (&d.document, *g, p))
        .collect();
    Ok(score_documents(&triples, &ScoreOptions::default()).conll)
}

/// Trains with early stopping on dev CoNLL and returns the best-dev model.
pub fn train(
    train_docs: &[AnnotatedDocument],
    dev_docs: &[AnnotatedDocument],
    emb: &dyn EmbeddingProvider,
    filter: &FilterLexicon,
    hp: &Hyperparams,
) -> Result<TrainOutcome> {
    hp.validate()?;
    if dev_docs.is_empty() {
        return Err(Error::Invalid("the dev corpus is empty".into()));
    }
    if emb.dim() != hp.emb_dim {
        return Err(Error::DimMismatch {
            model: hp.emb_dim,
            provided: emb.dim(),
        });
    }
    let lexicon = AnaphorLexicon::build(train_docs, hp.max_anaphor_width)?;
    let (examples, stats) = make_training_examples(train_docs, &lexicon.lexicon, hp)?;
    info!(
        "{} candidates, {} positive; {} of {} gold anaphors missed by the lexicon, {} beyond the window",
        stats.candidates, stats.positives, stats.lexicon_misses, stats.gold_anaphors, stats.out_of_window
    );
    let train_matrices = embed_all(train_docs, emb)?;
    let dev_matrices = embed_all(dev_docs, emb)?;

    let mut model = Model::new(hp.clone(), lexicon.lexicon, filter.clone());
    let mut adam = Adam::new(&model.params, hp.learning_rate);
    // Stream 1 keeps shuffling and dropout independent of initialisation.
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..examples.len()).collect();

    let mut log = Vec::new();
    let mut best: (usize, f64, ModelParams) = (0, f64::NEG_INFINITY, model.params.clone());
    if hp.epochs == 0 {
        best.1 = evaluate(&model, dev_docs, &dev_matrices)?;
    }
    let mut since_best = 0;
    for epoch in 1..=hp.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let mut epoch_loss = LossReport::default();
        for &i in &order {
            let example = &examples[i];
            if example.anaphors.is_empty() {
                continue;
            }
            let input = LossInput {
                doc: &train_docs[example.doc_index].document,
                matrix: &train_matrices[example.doc_index],
                filter,
                example,
            };
            let dropout = Dropout {
                rate: hp.dropout,
                rng: &mut rng,
            };
            let d = document_loss(&model.params, hp, &input, Some(dropout), true)?;
            epoch_loss = epoch_loss.merge(&d.report, hp.lambda);
            adam.step(
                &mut model.params,
                &d.gradients.expect("requested gradients"),
            );
        }
        if !model.params.is_finite() {
            return Err(Error::Invalid(format!(
                "parameters diverged in epoch {epoch}"
            )));
        }
        let dev_conll = evaluate(&model, dev_docs, &dev_matrices)?;
        let entry = EpochLog {
            epoch,
            loss: epoch_loss,
            dev_conll,
            seconds: started.elapsed().as_secs_f64(),
        };
        info!("{entry}");
        log.push(entry);
        if dev_conll > best.1 {
            best = (epoch, dev_conll, model.params.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= hp.patience {
                info!("no dev improvement for {since_best} epochs; stopping");
                break;
            }
        }
    }

    let (best_epoch, best_dev_conll, mut params) = best;
    params.round_to_f32();
    model.params = params;
    Ok(TrainOutcome {
        model,
        log,
        best_epoch,
        best_dev_conll,
        stats,
        excluded_forms: lexicon.excluded,
    })
}
