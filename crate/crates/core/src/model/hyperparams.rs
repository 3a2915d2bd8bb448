use std::fmt::Write as _;

use crate::candidates::{DEFAULT_MAX_ANAPHOR_WIDTH, DEFAULT_WINDOW};
use crate::error::{Error, Result};

/// Every tunable scalar of the model and its training run.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparams {
    /// Type-loss coefficient.
    pub lambda: f64,
    /// Utterance-distance penalty weight.
    pub gamma1: f64,
    /// Short-antecedent penalty weight.
    pub gamma2: f64,
    /// Hardness of "predicted anaphors should not resolve to the dummy".
    pub gamma3: f64,
    /// Hardness of "predicted non-anaphors should resolve to the dummy".
    pub gamma4: f64,
    pub window: usize,
    pub max_anaphor_width: usize,
    pub emb_dim: usize,
    pub span_dim: usize,
    pub ffnn_hidden: usize,
    pub ffnn_layers: usize,
    pub feature_dim: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lambda: 800.0,
            gamma1: 1.0,
            gamma2: 1.0,
            gamma3: 5.0,
            gamma4: 5.0,
            window: DEFAULT_WINDOW,
            max_anaphor_width: DEFAULT_MAX_ANAPHOR_WIDTH,
            emb_dim: 64,
            span_dim: 64,
            ffnn_hidden: 150,
            ffnn_layers: 2,
            feature_dim: 20,
            dropout: 0.3,
            learning_rate: 3e-4,
            epochs: 30,
            patience: 5,
            seed: 11,
        }
    }
}

pub const KEYS: &[&str] = &[
    "lambda",
    "gamma1",
    "gamma2",
    "gamma3",
    "gamma4",
    "window",
    "max_anaphor_width",
    "emb_dim",
    "span_dim",
    "ffnn_hidden",
    "ffnn_layers",
    "feature_dim",
    "dropout",
    "learning_rate",
    "epochs",
    "patience",
    "seed",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

impl Hyperparams {
    pub fn gammas(&self) -> [f64; 4] {
        [self.gamma1, self.gamma2, self.gamma3, self.gamma4]
    }

    pub fn set_gammas(&mut self, g: [f64; 4]) {
        [self.gamma1, self.gamma2, self.gamma3, self.gamma4] = g;
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lambda" => self.lambda = parse(key, value)?,
            "gamma1" => self.gamma1 = parse(key, value)?,
            "gamma2" => self.gamma2 = parse(key, value)?,
            "gamma3" => self.gamma3 = parse(key, value)?,
            "gamma4" => self.gamma4 = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "max_anaphor_width" => self.max_anaphor_width = parse(key, value)?,
            "emb_dim" => self.emb_dim = parse(key, value)?,
            "span_dim" => self.span_dim = parse(key, value)?,
            "ffnn_hidden" => self.ffnn_hidden = parse(key, value)?,
            "ffnn_layers" => self.ffnn_layers = parse(key, value)?,
            "feature_dim" => self.feature_dim = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// `(key, value)` pairs in [`KEYS`] order; values round-trip through [`Hyperparams::set`].
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let values = [
            self.lambda.to_string(),
            self.gamma1.to_string(),
            self.gamma2.to_string(),
            self.gamma3.to_string(),
            self.gamma4.to_string(),
            self.window.to_string(),
            self.max_anaphor_width.to_string(),
            self.emb_dim.to_string(),
            self.span_dim.to_string(),
            self.ffnn_hidden.to_string(),
            self.ffnn_layers.to_string(),
            self.feature_dim.to_string(),
            self.dropout.to_string(),
            self.learning_rate.to_string(),
            self.epochs.to_string(),
            self.patience.to_string(),
            self.seed.to_string(),
        ];
        KEYS.iter().copied().zip(values).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("lambda", self.lambda),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("learning_rate", self.learning_rate),
        ];
        for (k, v) in named {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!(
                    "{k} must be a non-negative number, got {v}"
                )));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        for (k, v) in [
            ("max_anaphor_width", self.max_anaphor_width),
            ("emb_dim", self.emb_dim),
            ("span_dim", self.span_dim),
            ("ffnn_hidden", self.ffnn_hidden),
            ("ffnn_layers", self.ffnn_layers),
            ("feature_dim", self.feature_dim),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{k} must be positive")));
            }
        }
        Ok(())
    }

    /// Flat `key = value` config text; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        self.validate()
    }

    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_best_dev_setting() {
        let hp = Hyperparams::default();
        assert_eq!(hp.lambda, 800.0);
        assert_eq!(hp.gammas(), [1.0, 1.0, 5.0, 5.0]);
        assert_eq!(
            (hp.window, hp.max_anaphor_width, hp.epochs, hp.seed),
            (10, 15, 30, 11)
        );
        assert_eq!(hp.learning_rate, 3e-4);
        assert_eq!(hp.dropout, 0.3);
    }

    #[test]
    fn config_round_trip() {
        let hp = Hyperparams {
            lambda: 0.2,
            gamma3: 10.0,
            learning_rate: 1.5e-3,
            ..Hyperparams::default()
        };
        let mut back = Hyperparams::default();
        back.apply_config(&hp.to_config()).unwrap();
        assert_eq!(back, hp);
    }

    #[test]
    fn unknown_key_and_comments() {
        let mut hp = Hyperparams::default();
        hp.apply_config("# tuned\nlambda = 200 # trailing\n\n")
            .unwrap();
        assert_eq!(hp.lambda, 200.0);
        assert!(matches!(
            hp.apply_config("lamda = 1"),
            Err(Error::Config(_))
        ));
        assert!(hp.apply_config("gamma3 = -1").is_err());
        assert!(hp.apply_config("window 3").is_err());
    }
}
