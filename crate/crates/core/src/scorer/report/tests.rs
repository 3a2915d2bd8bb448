use super::*;
use crate::corpus::Token;

fn doc(n: usize) -> Document {
    let utts = (0..n)
        .map(|i| {
            let words = if i % 2 == 0 {
                "i like that plan"
            } else {
                "we sold it today"
            };
            let tokens = words.split(' ').map(|w| Token::new(w, None)).collect();
            (format!("S{}", i % 2), tokens)
        })
        .collect();
    Document::new("d", utts)
}

fn link(d: &Document, anaphor: SpanRef, utts: &[usize]) -> Vec<Mention> {
    let mut c = vec![Mention::anaphor(anaphor)];
    c.extend(utts.iter().map(|&u| Mention::utterance(d, u)));
    c
}

fn all() -> ScoreOptions {
    ScoreOptions {
        per_anaphor: true,
        per_distance: true,
        ..ScoreOptions::default()
    }
}

#[test]
fn recognition_needs_exact_boundaries() {
    let d = doc(5);
    let gold = Clustering::new("d", vec![link(&d, SpanRef::new(3, 1, 1), &[1])]);
    let exact = Clustering::new("d", vec![link(&d, SpanRef::new(3, 1, 1), &[2])]);
    let wide = Clustering::new("d", vec![link(&d, SpanRef::new(3, 1, 2), &[1])]);
    let r = score_documents(&[(&d, &gold, &exact)], &all()).recognition;
    assert_eq!((r.precision, r.recall), (1.0, 1.0));
    let r = score_documents(&[(&d, &gold, &wide)], &all()).recognition;
    assert_eq!((r.precision, r.recall), (0.0, 0.0));
    let none = Clustering::new("d", vec![]);
    let r = score_documents(&[(&d, &gold, &none)], &all()).recognition;
    assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
}

#[test]
fn all_but_first_reads_position() {
    let d = doc(6);
    let gold = Clustering::new("d", vec![link(&d, SpanRef::new(4, 2, 2), &[1])]);
    // Unmarked system output: both mentions stored as utterance-kind except the later span.
    let sys = Clustering::new(
        "d",
        vec![vec![
            Mention::utterance(&d, 1),
            Mention {
                span: SpanRef::new(4, 2, 2),
                kind: crate::corpus::MentionKind::Utterance,
            },
        ]],
    );
    let marked = ScoreOptions::default();
    assert_eq!(
        score_documents(&[(&d, &gold, &sys)], &marked)
            .recognition
            .recall,
        0.0
    );
    let positional = ScoreOptions {
        convention: RecognitionConvention::AllButFirst,
        ..ScoreOptions::default()
    };
    assert_eq!(
        score_documents(&[(&d, &gold, &sys)], &positional)
            .recognition
            .f1,
        1.0
    );
}

#[test]
fn identity_scores_one_and_no_incorrect_links() {
    let d = doc(8);
    let gold = Clustering::new(
        "d",
        vec![
            link(&d, SpanRef::new(2, 2, 2), &[1]),
            link(&d, SpanRef::new(7, 2, 2), &[0, 6]),
        ],
    );
    let r = score_documents(&[(&d, &gold, &gold)], &all());
    assert_eq!(r.conll, 1.0);
    let dist = r.per_distance.unwrap();
    assert_eq!(dist.gold, [0, 2, 0, 0, 0, 0, 1]);
    assert_eq!(dist.correct, dist.gold);
    assert_eq!(dist.incorrect, [0; DISTANCE_BINS]);
}

#[test]
fn far_spurious_link_lands_in_last_bin() {
    let d = doc(14);
    let gold = Clustering::new("d", vec![link(&d, SpanRef::new(13, 2, 2), &[12])]);
    let sys = Clustering::new("d", vec![link(&d, SpanRef::new(13, 2, 2), &[1])]);
    let dist = score_documents(&[(&d, &gold, &sys)], &all())
        .per_distance
        .unwrap();
    assert_eq!(dist.incorrect, [0, 0, 0, 0, 0, 0, 1]);
    assert_eq!(dist.gold, [0, 1, 0, 0, 0, 0, 0]);
}

#[test]
fn single_form_table_matches_overall() {
    let d = doc(8);
    let gold = Clustering::new(
        "d",
        vec![
            link(&d, SpanRef::new(2, 2, 2), &[1]),
            link(&d, SpanRef::new(6, 2, 2), &[5]),
        ],
    );
    let sys = Clustering::new(
        "d",
        vec![
            link(&d, SpanRef::new(2, 2, 2), &[1, 5]),
            link(&d, SpanRef::new(6, 2, 2), &[0]),
        ],
    );
    let r = score_documents(&[(&d, &gold, &sys)], &all());
    let rows = r.per_anaphor.unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].form, "that");
    assert_eq!(rows[0].count, 2);
    assert!((rows[0].conll - r.conll).abs() < 1e-12);
}

#[test]
fn absent_form_is_omitted_and_unpredicted_form_scores_zero() {
    let d = doc(8);
    // "that" (even utterances, token 2) and "it" (odd utterances, token 2).
    let gold = Clustering::new(
        "d",
        vec![
            link(&d, SpanRef::new(2, 2, 2), &[1]),
            link(&d, SpanRef::new(5, 2, 2), &[4]),
        ],
    );
    let sys = Clustering::new("d", vec![link(&d, SpanRef::new(2, 2, 2), &[1])]);
    let rows = score_documents(&[(&d, &gold, &sys)], &all())
        .per_anaphor
        .unwrap();
    let forms: Vec<&str> = rows.iter().map(|r| r.form.as_str()).collect();
    assert_eq!(forms, ["it", "that"]);
    assert_eq!(rows[0].conll, 0.0);
    assert_eq!(rows[0].recognition.recall, 0.0);
    assert_eq!(rows[1].conll, 1.0);
}

#[test]
fn grouping_pools_unlisted_forms() {
    let g = FormGrouping::Listed(["that".to_string()].into());
    assert_eq!(g.label("that"), "that");
    assert_eq!(g.label("the idea"), "others");
    assert_eq!(FormGrouping::Each.label("the idea"), "the idea");
}

#[test]
fn system_singletons_are_dropped() {
    let d = doc(4);
    let gold = Clustering::new("d", vec![link(&d, SpanRef::new(2, 2, 2), &[1])]);
    let sys = Clustering::new(
        "d",
        vec![
            link(&d, SpanRef::new(2, 2, 2), &[1]),
            vec![Mention::anaphor(SpanRef::new(3, 2, 2))],
        ],
    );
    let r = score_documents(&[(&d, &gold, &sys)], &all());
    assert_eq!(r.conll, 1.0);
    assert_eq!(r.recognition.precision, 1.0);
}

#[test]
fn corpus_matching_by_id() {
    let d = doc(4);
    let gold = AnnotatedDocument {
        document: d.clone(),
        clusters: Some(Clustering::new(
            "d",
            vec![link(&d, SpanRef::new(2, 2, 2), &[1])],
        )),
    };
    let r = score_corpus(std::slice::from_ref(&gold), &[], &ScoreOptions::default()).unwrap();
    assert_eq!((r.documents, r.conll), (1, 0.0));
    let mut stray = gold.clone();
    stray.document.doc_id = "other".into();
    assert!(score_corpus(&[gold], &[stray], &ScoreOptions::default()).is_err());
}

#[test]
fn text_report_uses_four_decimals() {
    let d = doc(4);
    let gold = Clustering::new("d", vec![link(&d, SpanRef::new(2, 2, 2), &[1])]);
    let text = score_documents(&[(&d, &gold, &gold)], &all()).to_string();
    assert!(text.contains("CoNLL        1.0000"), "{text}");
    let tsv = score_documents(&[(&d, &gold, &gold)], &all()).to_tsv();
    assert!(tsv.contains("conll\t\t\t1.0000"));
    assert!(tsv.contains("gold\t0\t1\t0\t0\t0\t0\t0"));
}

#[test]
fn convention_parsing() {
    assert_eq!(
        "marked".parse::<RecognitionConvention>().unwrap(),
        RecognitionConvention::Marked
    );
    assert_eq!(
        "all-but-first".parse::<RecognitionConvention>().unwrap(),
        RecognitionConvention::AllButFirst
    );
    assert!("first".parse::<RecognitionConvention>().is_err());
}
