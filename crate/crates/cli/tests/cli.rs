use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deixis::candidates::AnaphorLexicon;
use deixis::corpus::{write_corpus, AnnotatedDocument, FilterLexicon};
use deixis::embeddings::DeterministicEmbeddings;
use deixis::model::{Hyperparams, Model};
use deixis::synth::{light_dev_shaped, link_distance_shaped, toy_corpus, TOY_WINDOW};

fn deixis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deixis"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn corpus(dir: &Path, name: &str, docs: &[AnnotatedDocument]) -> PathBuf {
    let path = dir.join(name);
    write_corpus(&path, docs).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// The CoNLL figure from a human-readable score report.
fn conll_of(report: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix("CoNLL"))
        .expect("report has a CoNLL line")
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn score_identity_prints_perfect_conll() {
    let dir = tempfile::tempdir().unwrap();
    let gold = corpus(dir.path(), "g.jsonl", &link_distance_shaped());
    let out = deixis(&["score", "--gold", s(&gold), "--sys", s(&gold)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("CoNLL        1.0000"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn score_tables_in_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let gold = corpus(dir.path(), "g.jsonl", &link_distance_shaped());
    let out = deixis(&[
        "score",
        "--gold",
        s(&gold),
        "--sys",
        s(&gold),
        "--per-distance",
        "--per-anaphor",
        "--recognition-convention",
        "all-but-first",
        "--tsv",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("gold\t90\t209\t97\t46\t21\t8\t19"), "{text}");
    assert!(text.contains("incorrect\t0\t0\t0\t0\t0\t0\t0"), "{text}");
    assert!(text.contains("conll\t\t\t1.0000"), "{text}");
    assert!(text.contains("that\t490\t"), "{text}");
}

#[test]
fn stats_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = corpus(dir.path(), "light.jsonl", &light_dev_shaped());
    let out = deixis(&["stats", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("total sents             908"), "{text}");
    assert!(text.contains("avg tokens per sent     12.7"), "{text}");

    let out = deixis(&["stats", "--input", s(&input), "--tsv"]);
    assert!(stdout(&out).contains("\n20\t908\t280\t45.4\t12.7\t14.0\t3.1\t4.2\t2.0\n"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = deixis(&["score", "--gold", "a", "--sys", "b", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
    assert_eq!(deixis(&["--help"]).status.code(), Some(0));
    assert_eq!(deixis(&[]).status.code(), Some(1));
}

#[test]
fn exactly_one_embedding_source() {
    let out = deixis(&["predict", "--model", "m", "--input", "i", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    let out = deixis(&[
        "predict",
        "--model",
        "m",
        "--input",
        "i",
        "--out",
        "o",
        "--emb",
        "e",
        "--det-emb",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");
    let out = deixis(&["stats", "--input", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.jsonl"));
}

#[test]
fn invalid_gold_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    fs::write(&path, "{\"doc_id\": \"d\", \"utterances\": [}\n").unwrap();
    let out = deixis(&["stats", "--input", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let docs = corpus(dir.path(), "t.jsonl", &toy_corpus(2, 1));
    let config = dir.path().join("hp.conf");
    fs::write(&config, "# toy\nwindow = 4\nwarmup = 3\n").unwrap();
    let out = deixis(&[
        "train",
        "--train",
        s(&docs),
        "--dev",
        s(&docs),
        "--det-emb",
        "1",
        "--config",
        s(&config),
        "--out",
        s(&dir.path().join("m.bin")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("warmup"), "{}", stderr(&out));
    assert!(!dir.path().join("m.bin").exists());
}

#[test]
fn predict_reports_dimension_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let docs = toy_corpus(2, 3);
    let input = corpus(dir.path(), "in.jsonl", &docs);
    let model_path = dir.path().join("m.bin");
    Model::new(
        Hyperparams::default(),
        AnaphorLexicon::from_forms(["that"]),
        FilterLexicon::default(),
    )
    .save(&model_path)
    .unwrap();
    let emb_path = dir.path().join("e.ddut");
    DeterministicEmbeddings::new(32, 1)
        .store_for(docs.iter().map(|d| &d.document))
        .unwrap()
        .save(&emb_path)
        .unwrap();
    let out = deixis(&[
        "predict",
        "--model",
        s(&model_path),
        "--input",
        s(&input),
        "--out",
        s(&dir.path().join("out.jsonl")),
        "--emb",
        s(&emb_path),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("64") && err.contains("32"), "{err}");
}

#[test]
fn gradcheck_passes() {
    let out = deixis(&["gradcheck", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("ok: max relative error"));
}

#[test]
fn toy_pipeline_train_predict_score() {
    let dir = tempfile::tempdir().unwrap();
    let docs = toy_corpus(40, 11);
    let train = corpus(dir.path(), "train.jsonl", &docs[..30]);
    let dev = corpus(dir.path(), "dev.jsonl", &docs[30..]);
    let config = dir.path().join("toy.conf");
    fs::write(&config, format!("window = {TOY_WINDOW}\nseed = 11\n")).unwrap();
    let before = (fs::read(&train).unwrap(), fs::read(&dev).unwrap());

    let model = dir.path().join("toy.model");
    let log = dir.path().join("epochs.tsv");
    let out = deixis(&[
        "train",
        "--train",
        s(&train),
        "--dev",
        s(&dev),
        "--det-emb",
        "11",
        "--config",
        s(&config),
        "--out",
        s(&model),
        "--log",
        s(&log),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(fs::read_to_string(&log).unwrap().starts_with("epoch\t"));

    let predicted = dir.path().join("pred.jsonl");
    let out = deixis(&[
        "predict",
        "--model",
        s(&model),
        "--input",
        s(&dev),
        "--out",
        s(&predicted),
        "--det-emb",
        "11",
        "--jobs",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let out = deixis(&["score", "--gold", s(&dev), "--sys", s(&predicted)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let conll = conll_of(&stdout(&out));
    assert!(conll >= 0.95, "toy pipeline CoNLL {conll}");

    assert_eq!(
        before,
        (fs::read(&train).unwrap(), fs::read(&dev).unwrap()),
        "inputs were modified"
    );
}

#[test]
fn grid_writes_table_and_best_config() {
    let dir = tempfile::tempdir().unwrap();
    let docs = toy_corpus(6, 5);
    let train = corpus(dir.path(), "train.jsonl", &docs[..4]);
    let dev = corpus(dir.path(), "dev.jsonl", &docs[4..]);
    let table = dir.path().join("grid.tsv");
    let best = dir.path().join("best.conf");
    let out = deixis(&[
        "grid",
        "--train",
        s(&train),
        "--dev",
        s(&dev),
        "--det-emb",
        "5",
        "--set",
        "epochs=1",
        "--set",
        "window=4",
        "--lambdas",
        "1,800",
        "--gamma1",
        "1",
        "--gamma2",
        "1",
        "--gamma3",
        "5",
        "--gamma4",
        "5",
        "--sweeps",
        "1",
        "--jobs",
        "2",
        "--table",
        s(&table),
        "--best-config",
        s(&best),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = fs::read_to_string(&table).unwrap();
    assert_eq!(rows.lines().count(), 3, "{rows}");
    let mut hp = Hyperparams::default();
    hp.apply_config(&fs::read_to_string(&best).unwrap())
        .unwrap();
    assert_eq!(hp.epochs, 1);
    assert!(hp.lambda == 1.0 || hp.lambda == 800.0);
}
