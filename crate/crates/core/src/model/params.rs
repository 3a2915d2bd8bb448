//! Learned tensors and their layout.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Hyperparams;
use crate::features::{COUNT_BUCKETS, SEGMENT_BUCKETS};

/// Width buckets: 1, 2, 3, 4, 5-7, 8-15, 16-31, 32+.
pub const WIDTH_BUCKETS: usize = 8;

pub fn width_bucket(width: usize) -> usize {
    match width {
        0 | 1 => 0,
        2..=4 => width - 1,
        5..=7 => 4,
        8..=15 => 5,
        16..=31 => 6,
        _ => 7,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Indices of one feed-forward network's tensors: hidden layers then a linear output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FfnnLayout {
    /// `(weight, bias, in, out)` per hidden layer.
    pub hidden: Vec<(usize, usize, usize, usize)>,
    pub output: (usize, usize, usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureTables {
    pub speaker: usize,
    pub segment: usize,
    pub distance: usize,
    pub filtered_distance: usize,
    pub n_words: usize,
    pub n_nouns: usize,
    pub n_verbs: usize,
    pub n_adjs: usize,
    pub overlap: usize,
    pub is_longest: usize,
    pub is_max_overlap: usize,
}

impl FeatureTables {
    pub const COUNT: usize = 11;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub attention: usize,
    pub width: usize,
    pub proj_w: usize,
    pub proj_b: usize,
    pub mention: FfnnLayout,
    pub coarse: usize,
    pub context: usize,
    pub fine: FfnnLayout,
    pub type_ffnn: FfnnLayout,
    pub features: FeatureTables,
}

#[derive(Clone, Copy)]
enum Init {
    Zero,
    Glorot { fan_in: usize, fan_out: usize },
    Uniform(f64),
}

struct TensorDecl {
    name: String,
    shape: Vec<usize>,
    init: Init,
}

#[derive(Default)]
struct Builder {
    decls: Vec<TensorDecl>,
}

impl Builder {
    fn add(&mut self, name: impl Into<String>, shape: Vec<usize>, init: Init) -> usize {
        self.decls.push(TensorDecl {
            name: name.into(),
            shape,
            init,
        });
        self.decls.len() - 1
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> usize {
        self.add(
            name,
            vec![rows, cols],
            Init::Glorot {
                fan_in: cols,
                fan_out: rows,
            },
        )
    }

    fn ffnn(
        &mut self,
        prefix: &str,
        input: usize,
        hidden: usize,
        layers: usize,
        output: usize,
    ) -> FfnnLayout {
        let mut width = input;
        let mut hidden_layers = Vec::new();
        for l in 0..layers {
            let w = self.matrix(&format!("{prefix}.l{l}.w"), hidden, width);
            let b = self.add(format!("{prefix}.l{l}.b"), vec![hidden], Init::Zero);
            hidden_layers.push((w, b, width, hidden));
            width = hidden;
        }
        let w = self.matrix(&format!("{prefix}.out.w"), output, width);
        let b = self.add(format!("{prefix}.out.b"), vec![output], Init::Zero);
        FfnnLayout {
            hidden: hidden_layers,
            output: (w, b, width, output),
        }
    }

    fn table(&mut self, name: &str, rows: usize, dim: usize) -> usize {
        self.add(name, vec![rows, dim], Init::Uniform(0.1))
    }
}

/// Size of the distance embedding tables: exact values `0..=max(window, 10)`.
pub fn distance_slots(hp: &Hyperparams) -> usize {
    hp.window.max(10) + 1
}

/// Input width of the fine-scoring network.
pub fn fine_input_dim(hp: &Hyperparams) -> usize {
    4 * hp.span_dim + FeatureTables::COUNT * hp.feature_dim
}

fn build(hp: &Hyperparams) -> (Vec<TensorDecl>, Layout) {
    let mut b = Builder::default();
    let e = hp.emb_dim;
    let d = hp.span_dim;
    let f = hp.feature_dim;
    let attention = b.add("span.attention", vec![e], Init::Uniform(0.1));
    let width = b.table("span.width", WIDTH_BUCKETS, f);
    let proj_w = b.matrix("span.proj.w", d, 3 * e + f);
    let proj_b = b.add("span.proj.b", vec![d], Init::Zero);
    let mention = b.ffnn("mention", d, hp.ffnn_hidden, hp.ffnn_layers, 1);
    let coarse = b.matrix("coarse.wc", d, d);
    let context = b.matrix("coarse.ws", d, d);
    let fine = b.ffnn(
        "fine",
        fine_input_dim(hp),
        hp.ffnn_hidden,
        hp.ffnn_layers,
        1,
    );
    let type_ffnn = b.ffnn("type", d, hp.ffnn_hidden, hp.ffnn_layers, 2);
    let slots = distance_slots(hp);
    let features = FeatureTables {
        speaker: b.table("feat.same_speaker", 2, f),
        segment: b.table("feat.segment_distance", SEGMENT_BUCKETS, f),
        distance: b.table("feat.utterance_distance", slots, f),
        filtered_distance: b.table("feat.filtered_distance", slots, f),
        n_words: b.table("feat.n_words", COUNT_BUCKETS, f),
        n_nouns: b.table("feat.n_nouns", COUNT_BUCKETS, f),
        n_verbs: b.table("feat.n_verbs", COUNT_BUCKETS, f),
        n_adjs: b.table("feat.n_adjs", COUNT_BUCKETS, f),
        overlap: b.table("feat.content_overlap", COUNT_BUCKETS, f),
        is_longest: b.table("feat.is_longest", 2, f),
        is_max_overlap: b.table("feat.is_max_overlap", 2, f),
    };
    let layout = Layout {
        attention,
        width,
        proj_w,
        proj_b,
        mention,
        coarse,
        context,
        fine,
        type_ffnn,
        features,
    };
    (b.decls, layout)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub tensors: Vec<Tensor>,
    pub layout: Layout,
}

impl ModelParams {
    /// Fresh parameters; Glorot-uniform weights, zero biases, small uniform tables.
    /// Values are drawn at `f32` precision so an untrained model saves losslessly.
    pub fn init(hp: &Hyperparams, seed: u64) -> Self {
        let (decls, layout) = build(hp);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = decls
            .into_iter()
            .map(|s| {
                let n: usize = s.shape.iter().product();
                let data = match s.init {
                    Init::Zero => vec![0.0; n],
                    Init::Glorot { fan_in, fan_out } => {
                        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                        (0..n).map(|_| rng.gen_range(-a..a)).collect()
                    }
                    Init::Uniform(a) => (0..n).map(|_| rng.gen_range(-a..a)).collect(),
                };
                let data = data.into_iter().map(|v: f64| v as f32 as f64).collect();
                Tensor {
                    name: s.name,
                    shape: s.shape,
                    data,
                }
            })
            .collect();
        ModelParams { tensors, layout }
    }

    /// Expected `(name, shape)` list for `hp`.
    pub fn expected_shapes(hp: &Hyperparams) -> (Vec<(String, Vec<usize>)>, Layout) {
        let (decls, layout) = build(hp);
        (
            decls.into_iter().map(|s| (s.name, s.shape)).collect(),
            layout,
        )
    }

    pub fn data(&self) -> Vec<&[f64]> {
        self.tensors.iter().map(|t| t.data.as_slice()).collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Rounds every value to the nearest `f32`, the precision of the model file.
    pub fn round_to_f32(&mut self) {
        for t in &mut self.tensors {
            for v in &mut t.data {
                *v = *v as f32 as f64;
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        let got: Vec<usize> = [1, 2, 3, 4, 5, 7, 8, 15, 16, 31, 32, 300]
            .iter()
            .map(|&w| width_bucket(w))
            .collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4, 4, 5, 5, 6, 6, 7, 7]);
    }

    #[test]
    fn init_is_seeded_and_shaped() {
        let hp = Hyperparams {
            emb_dim: 6,
            span_dim: 5,
            ffnn_hidden: 7,
            feature_dim: 3,
            ..Hyperparams::default()
        };
        let a = ModelParams::init(&hp, 1);
        assert_eq!(a, ModelParams::init(&hp, 1));
        assert_ne!(a, ModelParams::init(&hp, 2));
        let fine_in = a.get("fine.l0.w").unwrap();
        assert_eq!(fine_in.shape, vec![7, 4 * 5 + 11 * 3]);
        assert_eq!(a.get("feat.utterance_distance").unwrap().shape, vec![11, 3]);
        assert_eq!(a.get("type.out.w").unwrap().shape, vec![2, 7]);
        assert!(a.is_finite());
        for t in &a.tensors {
            assert_eq!(
                t.data.len(),
                t.shape.iter().product::<usize>(),
                "{}",
                t.name
            );
        }
    }
}
