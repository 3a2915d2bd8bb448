//! Generated corpora with known answers: a separable toy task for
//! end-to-end training, corpora with prescribed statistics, and a small
//! document for gradient checking.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::candidates::{extract_candidate_anaphors, AnaphorLexicon};
use crate::corpus::{
    AnnotatedDocument, Clustering, Document, FilterLexicon, Mention, Pos, SpanRef, Token,
};
use crate::embeddings::{DeterministicEmbeddings, EmbeddingProvider};
use crate::error::Result;
use crate::model::{Hyperparams, ModelParams};
use crate::training::{gradient_check, make_training_examples, GradientCheck, LossInput};

fn tagged(words: &[(&str, Pos)]) -> Vec<Token> {
    words.iter().map(|&(w, p)| Token::new(w, Some(p))).collect()
}

fn plain(text: &str) -> Vec<Token> {
    text.split_whitespace()
        .map(|w| Token::new(w, None))
        .collect()
}

fn annotated(document: Document, clusters: Vec<Vec<Mention>>) -> AnnotatedDocument {
    AnnotatedDocument {
        clusters: Some(Clustering::new(document.doc_id.clone(), clusters)),
        document,
    }
}

const TOY_VERBS: &[&str] = &[
    "paint", "sell", "clean", "fix", "move", "check", "book", "order",
];
const TOY_NOUNS: &[&str] = &[
    "fence", "car", "garage", "roof", "boat", "table", "tickets", "window", "garden", "lamp",
    "printer", "sofa",
];

/// Utterances per toy block: four statements, then the anaphoric reply.
pub const TOY_BLOCK: usize = 5;
pub const TOY_BLOCKS: usize = 4;
/// Window that makes every block's five utterances the candidate set.
pub const TOY_WINDOW: usize = TOY_BLOCK - 1;

/// A corpus where each reply "the N ? yes , i want that ." refers to the one
/// earlier statement in its block that mentions noun N.
///
/// Statements read "we should V the N today ."; nouns are distinct inside a
/// block and the referenced statement is 1 to 4 utterances back.
pub fn toy_corpus(docs: usize, seed: u64) -> Vec<AnnotatedDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..docs)
        .map(|d| {
            let mut utterances = Vec::new();
            let mut clusters = Vec::new();
            let speakers = ["A", "B"];
            for b in 0..TOY_BLOCKS {
                let nouns: Vec<&str> = TOY_NOUNS
                    .choose_multiple(&mut rng, TOY_BLOCK - 1)
                    .copied()
                    .collect();
                for &noun in &nouns {
                    let verb = *TOY_VERBS.choose(&mut rng).unwrap();
                    let tokens = tagged(&[
                        ("we", Pos::Pron),
                        ("should", Pos::Other),
                        (verb, Pos::Verb),
                        ("the", Pos::Other),
                        (noun, Pos::Noun),
                        ("today", Pos::Other),
                        (".", Pos::Punct),
                    ]);
                    utterances.push((speakers[rng.gen_range(0..2)].to_string(), tokens));
                }
                let target = rng.gen_range(0..TOY_BLOCK - 1);
                let reply = tagged(&[
                    ("the", Pos::Other),
                    (nouns[target], Pos::Noun),
                    ("?", Pos::Punct),
                    ("yes", Pos::Intj),
                    (",", Pos::Punct),
                    ("i", Pos::Pron),
                    ("want", Pos::Verb),
                    ("that", Pos::Pron),
                    (".", Pos::Punct),
                ]);
                utterances.push((speakers[rng.gen_range(0..2)].to_string(), reply));
                let reply_index = b * TOY_BLOCK + TOY_BLOCK - 1;
                clusters.push((reply_index, b * TOY_BLOCK + target));
            }
            let doc = Document::new(format!("toy-{d:02}"), utterances);
            let clusters = clusters
                .into_iter()
                .map(|(x, y)| {
                    vec![
                        Mention::utterance(&doc, y),
                        Mention::anaphor(SpanRef::new(x, 7, 7)),
                    ]
                })
                .collect();
            annotated(doc, clusters)
        })
        .collect()
}

/// Hyperparameters for the toy task: the defaults with the block-sized window.
pub fn toy_hyperparams() -> Hyperparams {
    Hyperparams {
        window: TOY_WINDOW,
        ..Hyperparams::default()
    }
}

/// Sentence counts 8×46 + 12×45 = 908, 14 two-speaker turns per document,
/// 11532 tokens, 62 anaphors and 84 antecedents over 20 documents.
pub fn light_dev_shaped() -> Vec<AnnotatedDocument> {
    const DOCS: usize = 20;
    const TURNS: usize = 14;
    const TOKENS: usize = 11532;
    const SENTENCES: usize = 908;
    let long_tokens = TOKENS - 12 * SENTENCES;
    let mut sentence_no = 0;
    let mut second_antecedents = 22;
    (0..DOCS)
        .map(|d| {
            let n = if d < 8 { 46 } else { 45 };
            let anaphors = if d < 2 { 4 } else { 3 };
            let mut utterances = Vec::with_capacity(n);
            for s in 0..n {
                // Spread sentences over turns as evenly as possible.
                let turn = s * TURNS / n;
                let len = if sentence_no < long_tokens { 13 } else { 12 };
                sentence_no += 1;
                let mut words: Vec<String> =
                    (0..len).map(|k| format!("w{}", (s + k) % 17)).collect();
                if s % 10 == 5 {
                    words[1] = "that".into();
                }
                let speaker = if turn.is_multiple_of(2) { "A" } else { "B" };
                utterances.push((speaker.to_string(), plain(&words.join(" "))));
            }
            let doc = Document::new(format!("light-{d:02}"), utterances);
            let clusters = (0..anaphors)
                .map(|j| {
                    let x = 5 + 10 * j;
                    let mut c = vec![
                        Mention::anaphor(SpanRef::new(x, 1, 1)),
                        Mention::utterance(&doc, x - 1),
                    ];
                    if second_antecedents > 0 {
                        second_antecedents -= 1;
                        c.push(Mention::utterance(&doc, x - 2));
                    }
                    c
                })
                .collect();
            annotated(doc, clusters)
        })
        .collect()
}

/// Anaphor forms and how often each occurs in [`per_anaphor_shaped`].
pub const PER_ANAPHOR_SHAPE: &[(&str, usize)] = &[
    ("that", 402),
    ("it", 95),
    ("this", 25),
    ("which", 10),
    ("the move", 14),
    ("the idea", 12),
    ("the whole thing", 10),
    ("so", 9),
    ("these", 7),
];

/// Forms reported individually; everything else in the shape pools as "others".
pub const TOP_FORMS: &[&str] = &["that", "it", "this", "which"];

/// One anaphor per odd utterance, each linked to the utterance before it.
pub fn per_anaphor_shaped() -> Vec<AnnotatedDocument> {
    const PER_DOC: usize = 30;
    let forms: Vec<&str> = PER_ANAPHOR_SHAPE
        .iter()
        .flat_map(|&(f, n)| std::iter::repeat_n(f, n))
        .collect();
    forms
        .chunks(PER_DOC)
        .enumerate()
        .map(|(d, chunk)| {
            let mut utterances = Vec::new();
            for (i, form) in chunk.iter().enumerate() {
                let speaker = if i % 2 == 0 { "A" } else { "B" };
                utterances.push((speaker.to_string(), plain("we could sell the old boat .")));
                utterances.push((speaker.to_string(), plain(&format!("{form} is fine ."))));
            }
            let doc = Document::new(format!("forms-{d:02}"), utterances);
            let clusters = chunk
                .iter()
                .enumerate()
                .map(|(i, form)| {
                    let x = 2 * i + 1;
                    let width = form.split_whitespace().count();
                    vec![
                        Mention::utterance(&doc, x - 1),
                        Mention::anaphor(SpanRef::new(x, 0, width - 1)),
                    ]
                })
                .collect();
            annotated(doc, clusters)
        })
        .collect()
}

/// Gold links per utterance distance 0..=12; bins 0-5 then >5 give 90, 209, 97, 46, 21, 8, 19.
pub const LINK_DISTANCE_SHAPE: [usize; 13] = [90, 209, 97, 46, 21, 8, 5, 4, 3, 3, 2, 1, 1];

/// One link per 13-utterance block, the anaphor closing the block.
pub fn link_distance_shaped() -> Vec<AnnotatedDocument> {
    const BLOCK: usize = 13;
    const PER_DOC: usize = 10;
    let distances: Vec<usize> = LINK_DISTANCE_SHAPE
        .iter()
        .enumerate()
        .flat_map(|(d, &n)| std::iter::repeat_n(d, n))
        .collect();
    distances
        .chunks(PER_DOC)
        .enumerate()
        .map(|(d, chunk)| {
            let utterances = (0..chunk.len() * BLOCK)
                .map(|u| {
                    let text = if u % BLOCK == BLOCK - 1 {
                        "yes that works"
                    } else {
                        "let us plan the trip"
                    };
                    (if u % 2 == 0 { "A" } else { "B" }.to_string(), plain(text))
                })
                .collect();
            let doc = Document::new(format!("links-{d:02}"), utterances);
            let clusters = chunk
                .iter()
                .enumerate()
                .map(|(b, &dist)| {
                    let x = b * BLOCK + BLOCK - 1;
                    vec![
                        Mention::utterance(&doc, x - dist),
                        Mention::anaphor(SpanRef::new(x, 1, 1)),
                    ]
                })
                .collect();
            annotated(doc, clusters)
        })
        .collect()
}

/// Two utterances: "that" and "this" refer to the first, "it" is not deictic.
pub fn gradcheck_document() -> AnnotatedDocument {
    let doc = Document::new(
        "gradcheck",
        vec![
            (
                "A".into(),
                tagged(&[
                    ("we", Pos::Pron),
                    ("should", Pos::Other),
                    ("paint", Pos::Verb),
                    ("the", Pos::Other),
                    ("old", Pos::Adj),
                    ("fence", Pos::Noun),
                    (".", Pos::Punct),
                ]),
            ),
            (
                "B".into(),
                tagged(&[
                    ("paint", Pos::Verb),
                    ("it", Pos::Pron),
                    ("?", Pos::Punct),
                    ("that", Pos::Pron),
                    ("is", Pos::Verb),
                    ("this", Pos::Pron),
                    ("week", Pos::Noun),
                    (".", Pos::Punct),
                ]),
            ),
        ],
    );
    let clusters = vec![vec![
        Mention::utterance(&doc, 0),
        Mention::anaphor(SpanRef::new(1, 3, 3)),
        Mention::anaphor(SpanRef::new(1, 5, 5)),
    ]];
    annotated(doc, clusters)
}

/// How the type predictor's output bias is set before a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeBias {
    /// Leave the initialised bias alone.
    Initial,
    /// Every candidate is predicted anaphoric, exercising the dummy penalty.
    Anaphor,
    /// Every candidate is predicted non-anaphoric, exercising the candidate penalty.
    NonAnaphor,
}

/// Gradient check of the full joint loss on [`gradcheck_document`] with
/// default hyperparameters and parameters initialised from `seed`.
pub fn synthetic_gradient_check(
    seed: u64,
    bias: TypeBias,
    coordinates: usize,
) -> Result<GradientCheck> {
    let hp = Hyperparams {
        seed,
        ..Hyperparams::default()
    };
    let d = gradcheck_document();
    let lexicon = AnaphorLexicon::from_forms(["that", "this", "it"]);
    debug_assert_eq!(extract_candidate_anaphors(&d.document, &lexicon).len(), 3);
    let (examples, _) = make_training_examples(std::slice::from_ref(&d), &lexicon, &hp)?;
    let matrix = DeterministicEmbeddings::new(hp.emb_dim, seed).embed(&d.document)?;
    let filter = FilterLexicon::default();
    let mut params = ModelParams::init(&hp, seed);
    let shift = match bias {
        TypeBias::Initial => None,
        TypeBias::Anaphor => Some([0.5, -0.5]),
        TypeBias::NonAnaphor => Some([-0.5, 0.5]),
    };
    if let Some(b) = shift {
        params.get_mut("type.out.b").expect("type bias tensor").data = b.to_vec();
    }
    let input = LossInput {
        doc: &d.document,
        matrix: &matrix,
        filter: &filter,
        example: &examples[0],
    };
    gradient_check(&params, &hp, &input, coordinates, 1e-3, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{corpus_stats, read_corpus_str, serialize_document, Strictness};

    #[test]
    fn toy_corpus_is_valid_and_reproducible() {
        let docs = toy_corpus(4, 11);
        assert_eq!(docs, toy_corpus(4, 11));
        assert_ne!(docs, toy_corpus(4, 12));
        let text: String = docs.iter().map(|d| serialize_document(d) + "\n").collect();
        assert_eq!(read_corpus_str(&text, Strictness::Gold).unwrap(), docs);
        for d in &docs {
            assert_eq!(d.document.utterances.len(), TOY_BLOCK * TOY_BLOCKS);
            for c in &d.clusters.as_ref().unwrap().clusters {
                let x = c.iter().find(|m| m.is_anaphor()).unwrap().span;
                let y = c.iter().find(|m| !m.is_anaphor()).unwrap().span.utt;
                assert!((1..=TOY_WINDOW).contains(&(x.utt - y)));
                // The referenced statement holds the reply's noun.
                let noun = &d.document.utterances[x.utt].tokens[1].text;
                assert_eq!(&d.document.utterances[y].tokens[4].text, noun);
            }
        }
    }

    #[test]
    fn shaped_corpora_validate() {
        for docs in [
            light_dev_shaped(),
            per_anaphor_shaped(),
            link_distance_shaped(),
            vec![gradcheck_document()],
        ] {
            let text: String = docs.iter().map(|d| serialize_document(d) + "\n").collect();
            assert_eq!(read_corpus_str(&text, Strictness::Gold).unwrap(), docs);
        }
    }

    #[test]
    fn light_dev_totals() {
        let s = corpus_stats(&light_dev_shaped());
        assert_eq!(
            (s.docs, s.sentences, s.turns, s.tokens),
            (20, 908, 280, 11532)
        );
        assert_eq!((s.anaphors, s.antecedents, s.speakers), (62, 84, 40));
    }
}
