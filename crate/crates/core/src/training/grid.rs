//! Hyperparameter search over the type-loss coefficient and penalty weights.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use log::info;
use rayon::prelude::*;

use super::train;
use crate::corpus::{AnnotatedDocument, FilterLexicon};
use crate::embeddings::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::model::Hyperparams;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub lambdas: Vec<f64>,
    /// Candidate values for gamma1..gamma4.
    pub gammas: [Vec<f64>; 4],
    /// Train every combination instead of searching one coordinate at a time.
    pub exhaustive: bool,
    /// Coordinate passes over (lambda, gamma1, ..., gamma4).
    pub sweeps: usize,
}

impl Default for Grid {
    /// Eight lambda values and {1, 5, 10} for each gamma.
    fn default() -> Self {
        let g = vec![1.0, 5.0, 10.0];
        Grid {
            lambdas: vec![0.2, 0.5, 1.0, 200.0, 500.0, 800.0, 1200.0, 1600.0],
            gammas: [g.clone(), g.clone(), g.clone(), g],
            exhaustive: false,
            sweeps: 2,
        }
    }
}

impl Grid {
    /// The one configuration in `hp`.
    pub fn single(hp: &Hyperparams) -> Self {
        Grid {
            lambdas: vec![hp.lambda],
            gammas: hp.gammas().map(|g| vec![g]),
            exhaustive: false,
            sweeps: 1,
        }
    }

    /// Comma-separated list of numbers.
    pub fn parse_values(text: &str) -> Result<Vec<f64>> {
        text.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("invalid grid value {v:?}")))
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.gammas.iter().any(Vec::is_empty) {
            return Err(Error::Config(
                "every grid axis needs at least one value".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridRow {
    pub lambda: f64,
    pub gammas: [f64; 4],
    pub dev_conll: f64,
}

impl GridRow {
    /// Higher dev CoNLL first; ties go to the smaller lambda, then the smaller gamma vector.
    pub fn rank(&self, other: &GridRow) -> Ordering {
        other
            .dev_conll
            .total_cmp(&self.dev_conll)
            .then(self.lambda.total_cmp(&other.lambda))
            .then_with(|| {
                self.gammas
                    .iter()
                    .zip(&other.gammas)
                    .map(|(a, b)| a.total_cmp(b))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub best: Hyperparams,
    pub best_row: GridRow,
    /// Every configuration trained, in the order first evaluated.
    pub rows: Vec<GridRow>,
}

impl GridResult {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("lambda\tgamma1\tgamma2\tgamma3\tgamma4\tdev_conll\n");
        for r in &self.rows {
            let [g1, g2, g3, g4] = r.gammas;
            let _ = writeln!(
                out,
                "{}\t{g1}\t{g2}\t{g3}\t{g4}\t{:.4}",
                r.lambda, r.dev_conll
            );
        }
        out
    }
}

type Key = (u64, [u64; 4]);

fn key(lambda: f64, gammas: [f64; 4]) -> Key {
    (lambda.to_bits(), gammas.map(f64::to_bits))
}

struct Search<'a> {
    train: &'a [AnnotatedDocument],
    dev: &'a [AnnotatedDocument],
    emb: &'a dyn EmbeddingProvider,
    filter: &'a FilterLexicon,
    base: &'a Hyperparams,
    pool: rayon::ThreadPool,
    cache: HashMap<Key, f64>,
    rows: Vec<GridRow>,
}

impl Search<'_> {
    /// Trains every configuration not yet seen and returns all of them, scored.
    fn evaluate(&mut self, configs: &[(f64, [f64; 4])]) -> Result<Vec<GridRow>> {
        let mut fresh: Vec<(f64, [f64; 4])> = Vec::new();
        for &(l, g) in configs {
            if !self.cache.contains_key(&key(l, g))
                && !fresh.iter().any(|&(fl, fg)| key(fl, fg) == key(l, g))
            {
                fresh.push((l, g));
            }
        }
        let (train_docs, dev_docs, emb, filter, base) =
            (self.train, self.dev, self.emb, self.filter, self.base);
        let scores: Vec<Result<f64>> = self.pool.install(|| {
            fresh
                .par_iter()
                .map(|&(lambda, gammas)| {
                    let mut hp = base.clone();
                    hp.lambda = lambda;
                    hp.set_gammas(gammas);
                    let outcome = train(train_docs, dev_docs, emb, filter, &hp)?;
                    info!(
                        "grid lambda={lambda} gammas={gammas:?} dev_conll={:.4}",
                        outcome.best_dev_conll
                    );
                    Ok(outcome.best_dev_conll)
                })
                .collect()
        });
        for (&(lambda, gammas), score) in fresh.iter().zip(scores) {
            let dev_conll = score?;
            self.cache.insert(key(lambda, gammas), dev_conll);
            self.rows.push(GridRow {
                lambda,
                gammas,
                dev_conll,
            });
        }
        Ok(configs
            .iter()
            .map(|&(lambda, gammas)| GridRow {
                lambda,
                gammas,
                dev_conll: self.cache[&key(lambda, gammas)],
            })
            .collect())
    }
}

fn best_of(rows: &[GridRow]) -> GridRow {
    *rows
        .iter()
        .min_by(|a, b| a.rank(b))
        .expect("non-empty grid")
}

/// Trains one model per configuration and keeps the best by dev CoNLL.
pub fn grid_search(
    train_docs: &[AnnotatedDocument],
    dev_docs: &[AnnotatedDocument],
    emb: &dyn EmbeddingProvider,
    filter: &FilterLexicon,
    base: &Hyperparams,
    grid: &Grid,
    jobs: usize,
) -> Result<GridResult> {
    grid.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("cannot start {jobs} worker threads: {e}")))?;
    let mut search = Search {
        train: train_docs,
        dev: dev_docs,
        emb,
        filter,
        base,
        pool,
        cache: HashMap::new(),
        rows: Vec::new(),
    };

    if grid.exhaustive {
        let mut configs = Vec::new();
        for &l in &grid.lambdas {
            for &g1 in &grid.gammas[0] {
                for &g2 in &grid.gammas[1] {
                    for &g3 in &grid.gammas[2] {
                        for &g4 in &grid.gammas[3] {
                            configs.push((l, [g1, g2, g3, g4]));
                        }
                    }
                }
            }
        }
        search.evaluate(&configs)?;
    } else {
        let start = |values: &[f64], current: f64| {
            if values.contains(&current) {
                current
            } else {
                values[0]
            }
        };
        let mut gammas = [0.0; 4];
        for (i, g) in gammas.iter_mut().enumerate() {
            *g = start(&grid.gammas[i], base.gammas()[i]);
        }
        for _ in 0..grid.sweeps.max(1) {
            let configs: Vec<_> = grid.lambdas.iter().map(|&l| (l, gammas)).collect();
            let lambda = best_of(&search.evaluate(&configs)?).lambda;
            for i in 0..4 {
                let configs: Vec<_> = grid.gammas[i]
                    .iter()
                    .map(|&v| {
                        let mut g = gammas;
                        g[i] = v;
                        (lambda, g)
                    })
                    .collect();
                gammas = best_of(&search.evaluate(&configs)?).gammas;
            }
        }
    }

    let best_row = best_of(&search.rows);
    let mut best = base.clone();
    best.lambda = best_row.lambda;
    best.set_gammas(best_row.gammas);
    Ok(GridResult {
        best,
        best_row,
        rows: search.rows,
    })
}
