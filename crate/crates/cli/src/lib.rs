//! Command-line front end: train, predict, score, stats, grid and gradcheck.
//!
//! [`run`] returns the process exit code: 0 on success, 1 when an input is
//! invalid (including bad arguments), 2 when a file cannot be read or written.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use deixis::corpus::{corpus_stats, read_corpus, AnnotatedDocument, FilterLexicon, Strictness};
use deixis::embeddings::{DeterministicEmbeddings, EmbeddingProvider, EmbeddingStore};
use deixis::inference::{resolve_corpus, write_predictions};
use deixis::model::{Hyperparams, Model};
use deixis::scorer::{score_corpus, FormGrouping, RecognitionConvention, ScoreOptions};
use deixis::synth::{synthetic_gradient_check, TypeBias};
use deixis::training::{grid_search, train, Grid};
use deixis::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

/// Largest relative error the gradient check accepts.
const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Parser, Debug)]
#[command(
    name = "deixis",
    version,
    about = "Discourse deixis resolution for dialogue"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model with early stopping on the dev set.
    Train(TrainArgs),
    /// Resolve anaphors in a corpus and write the predicted clusters.
    Predict(PredictArgs),
    /// Score system clusters against gold clusters.
    Score(ScoreArgs),
    /// Corpus statistics.
    Stats(StatsArgs),
    /// Search lambda and the penalty weights on the dev set.
    Grid(GridArgs),
    /// Compare analytic gradients with finite differences on a synthetic document.
    Gradcheck(GradcheckArgs),
}

/// Where token embeddings come from.
#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct EmbeddingSource {
    /// Precomputed embedding file.
    #[arg(long, value_name = "FILE")]
    emb: Option<PathBuf>,
    /// Hash-based deterministic embeddings with this seed.
    #[arg(long = "det-emb", value_name = "SEED")]
    det_emb: Option<u64>,
}

#[derive(Args, Debug)]
struct HyperparamArgs {
    /// Hyperparameter file of `key = value` lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one hyperparameter; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Filler and reporting-verb lexicon replacing the shipped one.
    #[arg(long, value_name = "FILE")]
    filter_lexicon: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    train: PathBuf,
    #[arg(long, value_name = "FILE")]
    dev: PathBuf,
    #[command(flatten)]
    embeddings: EmbeddingSource,
    #[command(flatten)]
    hyper: HyperparamArgs,
    /// Model file to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Per-epoch log as tab-separated values.
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    embeddings: EmbeddingSource,
    /// Documents resolved in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[arg(long, value_name = "FILE")]
    gold: PathBuf,
    #[arg(long, value_name = "FILE")]
    sys: PathBuf,
    #[arg(long)]
    per_anaphor: bool,
    #[arg(long)]
    per_distance: bool,
    /// How anaphors are read off system clusters: marked or all-but-first.
    #[arg(long, default_value = "marked", value_parser = parse_convention)]
    recognition_convention: RecognitionConvention,
    /// Comma-separated forms that get their own per-anaphor row; others pool together.
    #[arg(long, value_name = "LIST")]
    forms: Option<String>,
    /// Tab-separated output.
    #[arg(long)]
    tsv: bool,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    #[arg(long)]
    tsv: bool,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, value_name = "FILE")]
    train: PathBuf,
    #[arg(long, value_name = "FILE")]
    dev: PathBuf,
    #[command(flatten)]
    embeddings: EmbeddingSource,
    #[command(flatten)]
    hyper: HyperparamArgs,
    /// Comma-separated lambda values.
    #[arg(long, value_name = "LIST")]
    lambdas: Option<String>,
    #[arg(long, value_name = "LIST")]
    gamma1: Option<String>,
    #[arg(long, value_name = "LIST")]
    gamma2: Option<String>,
    #[arg(long, value_name = "LIST")]
    gamma3: Option<String>,
    #[arg(long, value_name = "LIST")]
    gamma4: Option<String>,
    /// Train every combination instead of one coordinate at a time.
    #[arg(long)]
    exhaustive: bool,
    /// Coordinate passes.
    #[arg(long)]
    sweeps: Option<usize>,
    /// Configurations trained in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Writes the full results table here.
    #[arg(long, value_name = "FILE")]
    table: Option<PathBuf>,
    /// Writes the winning hyperparameters here as a config file.
    #[arg(long, value_name = "FILE")]
    best_config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinates compared per check.
    #[arg(long, default_value_t = 200)]
    coordinates: usize,
}

fn parse_convention(s: &str) -> std::result::Result<RecognitionConvention, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses `argv` (program name first) and runs the chosen subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let outcome = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Score(a) => cmd_score(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}

fn require_output_dir(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Error::io(
            dir,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "output directory does not exist",
            ),
        )),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn hyperparams(args: &HyperparamArgs) -> Result<Hyperparams> {
    let mut hp = Hyperparams::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        hp.apply_config(&text)?;
    }
    for o in &args.overrides {
        let (key, value) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {o:?}")))?;
        hp.set(key.trim(), value.trim())?;
    }
    hp.validate()?;
    Ok(hp)
}

fn filter_lexicon(args: &HyperparamArgs) -> Result<FilterLexicon> {
    match &args.filter_lexicon {
        Some(path) => FilterLexicon::load(path),
        None => Ok(FilterLexicon::default()),
    }
}

fn embeddings(source: &EmbeddingSource, dim: usize) -> Result<Box<dyn EmbeddingProvider>> {
    match (&source.emb, source.det_emb) {
        (Some(path), _) => Ok(Box::new(EmbeddingStore::load(path)?)),
        (None, Some(seed)) => Ok(Box::new(DeterministicEmbeddings::new(dim, seed))),
        (None, None) => unreachable!("clap requires one embedding source"),
    }
}

fn check_dim(emb: &dyn EmbeddingProvider, hp: &Hyperparams) -> Result<()> {
    if emb.dim() == hp.emb_dim {
        Ok(())
    } else {
        Err(Error::DimMismatch {
            model: hp.emb_dim,
            provided: emb.dim(),
        })
    }
}

fn gold_corpus(path: &Path) -> Result<Vec<AnnotatedDocument>> {
    read_corpus(path, Strictness::Gold)
}

fn cmd_train(a: TrainArgs) -> Result<i32> {
    for p in [&a.train, &a.dev] {
        require_file(p)?;
    }
    if let Some(p) = &a.embeddings.emb {
        require_file(p)?;
    }
    require_output_dir(&a.out)?;
    let hp = hyperparams(&a.hyper)?;
    let filter = filter_lexicon(&a.hyper)?;
    let train_docs = gold_corpus(&a.train)?;
    let dev_docs = gold_corpus(&a.dev)?;
    let emb = embeddings(&a.embeddings, hp.emb_dim)?;
    check_dim(emb.as_ref(), &hp)?;
    info!(
        "training on {} documents, {} dev documents",
        train_docs.len(),
        dev_docs.len()
    );
    let outcome = train(&train_docs, &dev_docs, emb.as_ref(), &filter, &hp)?;
    outcome.model.save(&a.out)?;
    if let Some(path) = &a.log {
        let mut text =
            String::from("epoch\tresolution_loss\ttype_loss\ttotal_loss\tdev_conll\tseconds\n");
        for e in &outcome.log {
            text.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{:.6}\t{:.4}\t{:.2}\n",
                e.epoch,
                e.loss.resolution_loss,
                e.loss.type_loss,
                e.loss.total,
                e.dev_conll,
                e.seconds
            ));
        }
        write_text(path, &text)?;
    }
    if !outcome.excluded_forms.is_empty() {
        info!(
            "anaphor forms left out of the lexicon: {}",
            outcome.excluded_forms.join(", ")
        );
    }
    println!(
        "best dev CoNLL {:.4} at epoch {}; model written to {}",
        outcome.best_dev_conll,
        outcome.best_epoch,
        a.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_predict(a: PredictArgs) -> Result<i32> {
    require_file(&a.model)?;
    require_file(&a.input)?;
    if let Some(p) = &a.embeddings.emb {
        require_file(p)?;
    }
    require_output_dir(&a.out)?;
    let model = Model::load(&a.model)?;
    let docs = read_corpus(&a.input, Strictness::System)?;
    let emb = embeddings(&a.embeddings, model.hp.emb_dim)?;
    check_dim(emb.as_ref(), &model.hp)?;
    let predictions = resolve_corpus(&model, &docs, emb.as_ref(), a.jobs)?;
    write_predictions(&docs, &predictions, &a.out)?;
    let links: usize = predictions.iter().map(|p| p.links().count()).sum();
    println!(
        "{} documents, {links} links; written to {}",
        docs.len(),
        a.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_score(a: ScoreArgs) -> Result<i32> {
    require_file(&a.gold)?;
    require_file(&a.sys)?;
    let gold = gold_corpus(&a.gold)?;
    let sys = read_corpus(&a.sys, Strictness::System)?;
    let grouping = match &a.forms {
        Some(list) => FormGrouping::Listed(
            list.split(',')
                .map(|f| f.trim().to_lowercase())
                .filter(|f| !f.is_empty())
                .collect(),
        ),
        None => FormGrouping::Each,
    };
    let opts = ScoreOptions {
        convention: a.recognition_convention,
        per_anaphor: a.per_anaphor,
        per_distance: a.per_distance,
        grouping,
    };
    let report = score_corpus(&gold, &sys, &opts)?;
    if a.tsv {
        print!("{}", report.to_tsv());
    } else {
        println!("{report}");
    }
    Ok(EXIT_OK)
}

fn cmd_stats(a: StatsArgs) -> Result<i32> {
    require_file(&a.input)?;
    let docs = gold_corpus(&a.input)?;
    let stats = corpus_stats(&docs);
    if a.tsv {
        println!("{}", deixis::corpus::StatsReport::TSV_HEADER);
        println!("{}", stats.tsv_row());
    } else {
        println!("{stats}");
    }
    Ok(EXIT_OK)
}

fn cmd_grid(a: GridArgs) -> Result<i32> {
    for p in [&a.train, &a.dev] {
        require_file(p)?;
    }
    if let Some(p) = &a.embeddings.emb {
        require_file(p)?;
    }
    for p in a.table.iter().chain(&a.best_config) {
        require_output_dir(p)?;
    }
    let hp = hyperparams(&a.hyper)?;
    let filter = filter_lexicon(&a.hyper)?;
    let mut grid = Grid::default();
    if let Some(v) = &a.lambdas {
        grid.lambdas = Grid::parse_values(v)?;
    }
    for (slot, values) in grid
        .gammas
        .iter_mut()
        .zip([&a.gamma1, &a.gamma2, &a.gamma3, &a.gamma4])
    {
        if let Some(v) = values {
            *slot = Grid::parse_values(v)?;
        }
    }
    grid.exhaustive = a.exhaustive;
    if let Some(s) = a.sweeps {
        grid.sweeps = s;
    }
    let train_docs = gold_corpus(&a.train)?;
    let dev_docs = gold_corpus(&a.dev)?;
    let emb = embeddings(&a.embeddings, hp.emb_dim)?;
    check_dim(emb.as_ref(), &hp)?;
    let result = grid_search(
        &train_docs,
        &dev_docs,
        emb.as_ref(),
        &filter,
        &hp,
        &grid,
        a.jobs,
    )?;
    let table = result.to_tsv();
    if let Some(path) = &a.table {
        write_text(path, &table)?;
    }
    if let Some(path) = &a.best_config {
        write_text(path, &result.best.to_config())?;
    }
    print!("{table}");
    let r = result.best_row;
    println!(
        "best: lambda {} gammas {:?} dev CoNLL {:.4}",
        r.lambda, r.gammas, r.dev_conll
    );
    Ok(EXIT_OK)
}

fn cmd_gradcheck(a: GradcheckArgs) -> Result<i32> {
    let mut stdout = std::io::stdout().lock();
    let mut worst = 0.0f64;
    for bias in [TypeBias::Initial, TypeBias::Anaphor, TypeBias::NonAnaphor] {
        let r = synthetic_gradient_check(a.seed, bias, a.coordinates)?;
        worst = worst.max(r.max_relative_error);
        let _ = writeln!(
            stdout,
            "{bias:?}\tcoordinates {}\tskipped {}\tmax relative error {:.3e}\tworst {}",
            r.coordinates,
            r.skipped,
            r.max_relative_error,
            r.worst
                .map(|(t, i)| format!("{t}[{i}]"))
                .unwrap_or_default()
        );
    }
    if worst < GRADCHECK_TOLERANCE {
        let _ = writeln!(
            stdout,
            "ok: max relative error {worst:.3e} < {GRADCHECK_TOLERANCE:e}"
        );
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(
            stdout,
            "FAILED: max relative error {worst:.3e} >= {GRADCHECK_TOLERANCE:e}"
        );
        Ok(EXIT_INVALID)
    }
}
