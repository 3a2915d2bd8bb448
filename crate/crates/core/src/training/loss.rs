//! Marginal-likelihood resolution loss plus the weighted type loss.

use std::fmt;

use super::examples::TrainingExample;
use crate::corpus::{Document, FilterLexicon};
use crate::embeddings::Matrix;
use crate::error::{Error, Result};
use crate::features::DocumentFeatures;
use crate::model::{Dropout, Hyperparams, ModelParams, Network, TypeLabel};
use crate::tape::Tape;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossReport {
    pub resolution_loss: f64,
    pub type_loss: f64,
    /// Always `resolution_loss + lambda * type_loss`.
    pub total: f64,
}

impl LossReport {
    pub fn new(resolution_loss: f64, type_loss: f64, lambda: f64) -> Self {
        LossReport {
            resolution_loss,
            type_loss,
            total: resolution_loss + lambda * type_loss,
        }
    }

    /// Sums the parts of two reports and recomputes the total.
    pub fn merge(&self, other: &LossReport, lambda: f64) -> Self {
        LossReport::new(
            self.resolution_loss + other.resolution_loss,
            self.type_loss + other.type_loss,
            lambda,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.resolution_loss.is_finite() && self.type_loss.is_finite() && self.total.is_finite()
    }
}

impl fmt::Display for LossReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "res {:.6} type {:.6} total {:.6}",
            self.resolution_loss, self.type_loss, self.total
        )
    }
}

/// Loss of one document, with gradients when requested.
#[derive(Clone, Debug)]
pub struct DocumentLoss {
    pub report: LossReport,
    pub gradients: Option<Vec<Vec<f64>>>,
    /// Predicted type of each candidate anaphor, in example order.
    pub predicted: Vec<TypeLabel>,
}

pub struct LossInput<'a> {
    pub doc: &'a Document,
    pub matrix: &'a Matrix,
    pub filter: &'a FilterLexicon,
    pub example: &'a TrainingExample,
}

/// Joint loss of one document, summed over its candidate anaphors.
pub fn document_loss(
    params: &ModelParams,
    hp: &Hyperparams,
    input: &LossInput<'_>,
    dropout: Option<Dropout<'_>>,
    with_gradients: bool,
) -> Result<DocumentLoss> {
    let doc = input.doc;
    let feats = DocumentFeatures::new(doc, input.filter);
    let mut tape = Tape::new(params.data());
    let mut net = Network::new(params, hp, doc, input.matrix, dropout)?;

    let mut res_sum = None;
    let mut type_sum = None;
    let mut predicted = Vec::with_capacity(input.example.anaphors.len());
    for a in &input.example.anaphors {
        let g = net.anaphor(&mut tape, &feats, a.span);
        predicted.push(g.type_prediction.label);
        let first = g.set.antecedents[0];
        let gold = tape.gather(g.scores, &a.target_positions(first));
        let all = tape.log_sum_exp(g.scores);
        let correct = tape.log_sum_exp(gold);
        let res = tape.sub(all, correct);

        let ot_all = tape.log_sum_exp(g.ot);
        let ot_gold = tape.index(g.ot, a.label.index());
        let typ = tape.sub(ot_all, ot_gold);

        if !(tape.scalar(res).is_finite() && tape.scalar(typ).is_finite()) {
            return Err(Error::NonFiniteLoss {
                doc_id: doc.doc_id.clone(),
                anaphor: format!("{} {:?}", a.span, doc.surface(a.span)),
            });
        }
        res_sum = Some(res_sum.map_or(res, |s| tape.add(s, res)));
        type_sum = Some(type_sum.map_or(typ, |s| tape.add(s, typ)));
    }

    let (Some(res), Some(typ)) = (res_sum, type_sum) else {
        return Ok(DocumentLoss {
            report: LossReport::default(),
            gradients: with_gradients
                .then(|| params.tensors.iter().map(|t| vec![0.0; t.len()]).collect()),
            predicted,
        });
    };
    let weighted = tape.scale(typ, hp.lambda);
    let total = tape.add(res, weighted);
    let report = LossReport::new(tape.scalar(res), tape.scalar(typ), hp.lambda);
    debug_assert_eq!(report.total, tape.scalar(total));
    Ok(DocumentLoss {
        report,
        gradients: with_gradients.then(|| tape.backward(total)),
        predicted,
    })
}

/// Deterministic (dropout-free) loss over a whole corpus.
pub fn joint_loss(
    params: &ModelParams,
    hp: &Hyperparams,
    inputs: &[LossInput<'_>],
) -> Result<LossReport> {
    let mut report = LossReport::default();
    for input in inputs {
        let d = document_loss(params, hp, input, None, false)?;
        report = report.merge(&d.report, hp.lambda);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::{log_sum_exp, softmax};

    #[test]
    fn closed_forms() {
        // P(gold) = 0.5 over two equal scores.
        let scores = [0.3, 0.3];
        let res = log_sum_exp(&scores) - log_sum_exp(&scores[1..]);
        assert!((res - 2f64.ln()).abs() < 1e-12);
        // A saturated type distribution costs nothing.
        let ot = [800.0, 0.0];
        let typ = log_sum_exp(&ot) - ot[0];
        assert_eq!(typ, 0.0);
        assert_eq!(softmax(&ot)[0], 1.0);
    }

    #[test]
    fn total_is_exact_combination() {
        let r = LossReport::new(0.75, 0.125, 800.0);
        assert_eq!(r.total - r.resolution_loss - 800.0 * r.type_loss, 0.0);
        let m = r.merge(&LossReport::new(1.0, 0.5, 800.0), 800.0);
        assert_eq!(m.total, m.resolution_loss + 800.0 * m.type_loss);
    }
}
