//! The scoring network as a computation on a [`Tape`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::{distance_slots, width_bucket, FfnnLayout, Layout, ModelParams};
use super::scoring::{
    score_dummy, score_pair, PairComponents, ScoreBreakdown, ScoreEntry, TypePrediction,
};
use super::Hyperparams;
use crate::candidates::{candidate_antecedents, CandidateSet};
use crate::corpus::{Document, SpanRef};
use crate::embeddings::Matrix;
use crate::error::{Error, Result};
use crate::features::{count_bucket, DocumentFeatures, PairFeatures};
use crate::tape::{Tape, Var};

/// Inverted dropout on FFNN hidden layers during training.
pub struct Dropout<'r> {
    pub rate: f64,
    pub rng: &'r mut ChaCha8Rng,
}

impl Dropout<'_> {
    fn mask(&mut self, n: usize) -> Vec<f64> {
        let keep = 1.0 / (1.0 - self.rate);
        (0..n)
            .map(|_| {
                if self.rng.gen::<f64>() < self.rate {
                    0.0
                } else {
                    keep
                }
            })
            .collect()
    }
}

/// Tape variables for one real candidate antecedent.
#[derive(Clone, Copy, Debug)]
pub struct PairVars {
    pub mention_y: Var,
    pub coarse: Var,
    pub fine: Var,
}

/// Everything recorded for one candidate anaphor.
#[derive(Clone, Debug)]
pub struct AnaphorGraph {
    pub set: CandidateSet,
    pub features: Vec<PairFeatures>,
    /// Type-predictor output, 2 entries.
    pub ot: Var,
    pub type_prediction: TypePrediction,
    pub mention_x: Var,
    pub pairs: Vec<PairVars>,
    /// Final scores: the dummy first, then `set.antecedents` in order.
    pub scores: Var,
}

impl AnaphorGraph {
    /// Reads the recorded values back into a [`ScoreBreakdown`].
    pub fn breakdown(&self, tape: &Tape<'_>, doc: &Document, hp: &Hyperparams) -> ScoreBreakdown {
        let tp = self.type_prediction;
        let mut entries: Vec<ScoreEntry> = vec![score_dummy(&tp, hp)];
        for ((&y, pv), f) in self
            .set
            .antecedents
            .iter()
            .zip(&self.pairs)
            .zip(&self.features)
        {
            let components = PairComponents {
                mention_x: tape.scalar(self.mention_x),
                mention_y: tape.scalar(pv.mention_y),
                coarse: tape.scalar(pv.coarse),
                fine: tape.scalar(pv.fine),
            };
            let length = doc.utterances[y].len();
            entries.push(score_pair(
                y,
                components,
                f.utterance_distance,
                length,
                &tp,
                hp,
            ));
        }
        ScoreBreakdown::new(tp, entries)
    }
}

/// Builds the network for one document over a tape borrowing `params`.
pub struct Network<'a, 'r> {
    layout: &'a Layout,
    hp: &'a Hyperparams,
    doc: &'a Document,
    emb: &'a Matrix,
    offsets: Vec<usize>,
    dropout: Option<Dropout<'r>>,
    utterances: Vec<Option<(Var, Var)>>,
}

impl<'a, 'r> Network<'a, 'r> {
    pub fn new(
        params: &'a ModelParams,
        hp: &'a Hyperparams,
        doc: &'a Document,
        emb: &'a Matrix,
        dropout: Option<Dropout<'r>>,
    ) -> Result<Self> {
        if emb.cols != hp.emb_dim {
            return Err(Error::DimMismatch {
                model: hp.emb_dim,
                provided: emb.cols,
            });
        }
        if emb.rows != doc.token_count() {
            return Err(Error::validation(
                &doc.doc_id,
                format!(
                    "{} embedding rows for {} tokens",
                    emb.rows,
                    doc.token_count()
                ),
            ));
        }
        Ok(Network {
            layout: &params.layout,
            hp,
            doc,
            emb,
            offsets: doc.utterance_offsets(),
            dropout: dropout.filter(|d| d.rate > 0.0),
            utterances: vec![None; doc.utterances.len()],
        })
    }

    /// Projected representation of `span`: first, last and attended tokens plus width.
    pub fn span_representation(&mut self, tape: &mut Tape<'_>, span: SpanRef) -> Var {
        let e = self.hp.emb_dim;
        let first = self.offsets[span.utt] + span.start;
        let n = span.width();
        let mut rows = Vec::with_capacity(n * e);
        for t in first..first + n {
            rows.extend(self.emb.row(t).iter().map(|&v| v as f64));
        }
        let x_first = tape.constant(rows[..e].to_vec());
        let x_last = tape.constant(rows[(n - 1) * e..].to_vec());
        let tokens = tape.constant(rows);
        let attn = tape.param(self.layout.attention);
        let logits = tape.matvec(tokens, attn, n, e);
        let alpha = tape.softmax(logits);
        let head = tape.mat_t_vec(tokens, alpha, n, e);
        let table = tape.param(self.layout.width);
        let width = tape.row(table, width_bucket(n), self.hp.feature_dim);
        let joined = tape.concat(&[x_first, x_last, head, width]);
        let w = tape.param(self.layout.proj_w);
        let b = tape.param(self.layout.proj_b);
        tape.affine(w, joined, b, self.hp.span_dim, 3 * e + self.hp.feature_dim)
    }

    fn ffnn(&mut self, tape: &mut Tape<'_>, net: &FfnnLayout, x: Var) -> Var {
        let mut h = x;
        for &(w, b, input, output) in &net.hidden {
            let (w, b) = (tape.param(w), tape.param(b));
            let z = tape.affine(w, h, b, output, input);
            h = tape.gelu(z);
            if let Some(d) = self.dropout.as_mut() {
                let mask = tape.constant(d.mask(output));
                h = tape.mul(h, mask);
            }
        }
        let (w, b, input, output) = net.output;
        let (w, b) = (tape.param(w), tape.param(b));
        tape.affine(w, h, b, output, input)
    }

    /// `(g, s_m)` of a whole utterance, built once per document.
    fn utterance(&mut self, tape: &mut Tape<'_>, utt: usize) -> (Var, Var) {
        if let Some(v) = self.utterances[utt] {
            return v;
        }
        let g = self.span_representation(tape, self.doc.utterances[utt].span());
        let layout = self.layout;
        let s = self.ffnn(tape, &layout.mention, g);
        self.utterances[utt] = Some((g, s));
        (g, s)
    }

    fn feature_vector(&self, tape: &mut Tape<'_>, f: &PairFeatures) -> Var {
        let t = &self.layout.features;
        let slots = distance_slots(self.hp);
        let a = &f.antecedent;
        let picks = [
            (t.speaker, f.same_speaker as usize),
            (t.segment, f.segment_distance_bucket),
            (t.distance, f.utterance_distance.min(slots - 1)),
            (
                t.filtered_distance,
                f.filtered_utterance_distance.min(slots - 1),
            ),
            (t.n_words, count_bucket(a.n_words)),
            (t.n_nouns, count_bucket(a.n_nouns)),
            (t.n_verbs, count_bucket(a.n_verbs)),
            (t.n_adjs, count_bucket(a.n_adjs)),
            (t.overlap, count_bucket(a.n_content_overlap)),
            (t.is_longest, a.is_longest as usize),
            (t.is_max_overlap, a.is_max_overlap as usize),
        ];
        let rows: Vec<Var> = picks
            .iter()
            .map(|&(table, row)| {
                let table = tape.param(table);
                tape.row(table, row, self.hp.feature_dim)
            })
            .collect();
        tape.concat(&rows)
    }

    /// Records every score of candidate anaphor `x`.
    pub fn anaphor(
        &mut self,
        tape: &mut Tape<'_>,
        feats: &DocumentFeatures<'_>,
        x: SpanRef,
    ) -> AnaphorGraph {
        let hp = self.hp;
        let set = candidate_antecedents(x, hp.window);
        let features = feats.pair_features(&set);

        let g_x = self.span_representation(tape, x);
        let layout = self.layout;
        let mention_x = self.ffnn(tape, &layout.mention, g_x);
        let ot = self.ffnn(tape, &layout.type_ffnn, g_x);
        let ot_values = tape.value(ot);
        let type_prediction = TypePrediction::from_scores([ot_values[0], ot_values[1]]);

        let ot_a = tape.index(ot, 0);
        let ot_na = tape.index(ot, 1);
        // The branch is fixed by the forward values; gradients flow through the active margin only.
        let (dummy, p2) = match type_prediction.label {
            super::TypeLabel::Anaphor => {
                let p1 = tape.sub(ot_a, ot_na);
                (tape.scale(p1, -hp.gamma3), None)
            }
            super::TypeLabel::NonAnaphor => {
                (tape.scalar_constant(0.0), Some(tape.sub(ot_na, ot_a)))
            }
        };
        let type_term = p2.map(|p| tape.scale(p, -hp.gamma4));

        let (g_s, _) = self.utterance(tape, x.utt);
        let wc = tape.param(layout.coarse);
        let ws = tape.param(layout.context);
        let d = hp.span_dim;

        let mut pairs = Vec::with_capacity(set.antecedents.len());
        let mut scores = vec![dummy];
        for (&y, f) in set.antecedents.iter().zip(&features) {
            let (g_y, mention_y) = self.utterance(tape, y);
            let wc_gy = tape.matvec(wc, g_y, d, d);
            let ws_gy = tape.matvec(ws, g_y, d, d);
            let c1 = tape.dot(g_x, wc_gy);
            let c2 = tape.dot(g_s, ws_gy);
            let coarse = tape.add(c1, c2);

            let prod = tape.mul(g_x, g_y);
            let phi = self.feature_vector(tape, f);
            let input = tape.concat(&[g_x, g_y, prod, g_s, phi]);
            let fine = self.ffnn(tape, &layout.fine, input);

            let fixed = -super::scoring::distance_penalty(f.utterance_distance, hp)
                - super::scoring::length_penalty(self.doc.utterances[y].len(), hp);
            let fixed = tape.scalar_constant(fixed);
            let mut s = tape.add(mention_x, mention_y);
            s = tape.add(s, coarse);
            s = tape.add(s, fine);
            s = tape.add(s, fixed);
            if let Some(t) = type_term {
                s = tape.add(s, t);
            }
            scores.push(s);
            pairs.push(PairVars {
                mention_y,
                coarse,
                fine,
            });
        }
        let scores = tape.concat(&scores);
        AnaphorGraph {
            set,
            features,
            ot,
            type_prediction,
            mention_x,
            pairs,
            scores,
        }
    }
}

/// Inference-time span representation, without dropout.
pub fn span_representation(
    params: &ModelParams,
    hp: &Hyperparams,
    doc: &Document,
    emb: &Matrix,
    span: SpanRef,
) -> Result<Vec<f64>> {
    let mut tape = Tape::new(params.data());
    let mut net = Network::new(params, hp, doc, emb, None)?;
    let g = net.span_representation(&mut tape, span);
    Ok(tape.value(g).to_vec())
}
