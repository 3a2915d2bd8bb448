use proptest::prelude::*;

use deixis::corpus::{read_corpus, FilterLexicon, Strictness};
use deixis::embeddings::{DeterministicEmbeddings, EmbeddingProvider, EmbeddingStore};
use deixis::inference::{resolve_corpus, write_predictions};
use deixis::model::Hyperparams;
use deixis::scorer::{score_corpus, CorefCounts, ScoreOptions};
use deixis::synth::{toy_corpus, toy_hyperparams};
use deixis::training::train;

#[test]
fn training_loss_falls_over_thirty_epochs() {
    let docs = toy_corpus(12, 21);
    let hp = Hyperparams {
        patience: 30,
        ..toy_hyperparams()
    };
    let emb = DeterministicEmbeddings::new(64, 21);
    let out = train(&docs[..9], &docs[9..], &emb, &FilterLexicon::default(), &hp).unwrap();
    assert_eq!(out.log.len(), 30);
    let (first, last) = (&out.log[0].loss, &out.log[29].loss);
    assert!(last.total < first.total, "{first} then {last}");
    for entry in &out.log {
        assert!(entry.loss.is_finite());
        assert_eq!(
            entry.loss.total,
            entry.loss.resolution_loss + hp.lambda * entry.loss.type_loss
        );
    }
}

#[test]
fn stored_embeddings_match_the_generator_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let docs = toy_corpus(10, 8);
    let hp = Hyperparams {
        epochs: 4,
        ..toy_hyperparams()
    };
    let det = DeterministicEmbeddings::new(64, 8);
    let out = train(&docs[..8], &docs[8..], &det, &FilterLexicon::default(), &hp).unwrap();

    let path = dir.path().join("toy.ddut");
    det.store_for(docs.iter().map(|d| &d.document))
        .unwrap()
        .save(&path)
        .unwrap();
    let stored = EmbeddingStore::load(&path).unwrap();
    assert_eq!(stored.dim(), 64);

    let from_det = resolve_corpus(&out.model, &docs, &det, 1).unwrap();
    let from_file = resolve_corpus(&out.model, &docs, &stored, 1).unwrap();
    let parallel = resolve_corpus(&out.model, &docs, &stored, 4).unwrap();
    assert_eq!(from_det, from_file);
    assert_eq!(from_det, parallel);
}

#[test]
fn written_predictions_score_like_the_in_memory_ones() {
    let dir = tempfile::tempdir().unwrap();
    let docs = toy_corpus(12, 9);
    let emb = DeterministicEmbeddings::new(64, 9);
    let out = train(
        &docs[..10],
        &docs[10..],
        &emb,
        &FilterLexicon::default(),
        &toy_hyperparams(),
    )
    .unwrap();
    let predictions = resolve_corpus(&out.model, &docs[10..], &emb, 1).unwrap();

    let path = dir.path().join("pred.jsonl");
    write_predictions(&docs[10..], &predictions, &path).unwrap();
    let sys = read_corpus(&path, Strictness::System).unwrap();
    assert_eq!(sys.len(), 2);
    for (s, d) in sys.iter().zip(&docs[10..]) {
        assert_eq!(s.document, d.document);
    }
    let report = score_corpus(&docs[10..], &sys, &ScoreOptions::default()).unwrap();
    let direct: f64 = {
        let mut total = CorefCounts::default();
        for (p, d) in predictions.iter().zip(&docs[10..]) {
            let gold = d.clustering().without_singletons();
            let ids = |c: &deixis::corpus::Clustering| c.clusters.clone();
            total += CorefCounts::compute(&ids(&gold), &ids(&p.clustering.without_singletons()));
        }
        total.conll()
    };
    assert!(
        (report.conll - direct).abs() < 1e-12,
        "{} vs {direct}",
        report.conll
    );
    assert!((report.conll - out.best_dev_conll).abs() < 1e-12);
}

fn partition(labels: Vec<u8>) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); 5];
    for (m, l) in labels.into_iter().enumerate() {
        if l < 5 {
            clusters[l as usize].push(m);
        }
    }
    clusters.retain(|c| !c.is_empty());
    clusters
}

proptest! {
    #[test]
    fn metrics_ignore_order_and_swap_roles(
        gold in proptest::collection::vec(0u8..6, 1..12),
        sys in proptest::collection::vec(0u8..6, 1..12),
        rot in 0usize..5,
    ) {
        let (g, s) = (partition(gold), partition(sys));
        let base = CorefCounts::compute(&g, &s);

        let mut shuffled = s.clone();
        let k = rot % shuffled.len().max(1);
        shuffled.rotate_left(k);
        for c in &mut shuffled {
            c.reverse();
        }
        let again = CorefCounts::compute(&g, &shuffled);
        prop_assert!((base.conll() - again.conll()).abs() < 1e-12);

        let swapped = CorefCounts::compute(&s, &g);
        for (a, b) in [(base.muc, swapped.muc), (base.b3, swapped.b3), (base.ceaf_e, swapped.ceaf_e)] {
            prop_assert!((a.prf().precision - b.prf().recall).abs() < 1e-12);
            prop_assert!((a.prf().recall - b.prf().precision).abs() < 1e-12);
        }

        let identity = CorefCounts::compute(&g, &g);
        if g.iter().any(|c| c.len() > 1) {
            prop_assert!((identity.conll() - 1.0).abs() < 1e-12);
        }
    }
}
