use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numerics::Rng;

pub const DEFAULT_INIT_SCALE: f64 = 0.08;

/// Network dimensions and the stem/suffix interpolation weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub src_vocab: usize,
    pub stem_vocab: usize,
    pub suffix_vocab: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub dropout_rate: f64,
    /// Weight of the suffix loss; the stem loss gets `1 - lambda`.
    pub lambda: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!("lambda {} not in [0, 1]", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout {} not in [0, 1)",
                self.dropout_rate
            )));
        }
        for (name, v) in [
            ("src_vocab", self.src_vocab),
            ("stem_vocab", self.stem_vocab),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
        ] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        // <unk> <s> </s> N
        if self.suffix_vocab < 4 {
            return Err(Error::InvalidArgument(
                "suffix vocabulary must contain the reserved tokens and N".into(),
            ));
        }
        if self.stem_vocab < 3 {
            return Err(Error::InvalidArgument(
                "stem vocabulary must contain the reserved tokens".into(),
            ));
        }
        Ok(())
    }
}

/// Everything a training run needs besides data.
///
/// Serialized as flat `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub lambda: f64,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub init_scale: f64,
    pub sync_every: usize,
    pub workers: usize,
    pub threads: usize,
    pub src_vocab_size: usize,
    pub stem_vocab_size: usize,
    pub suffix_vocab_size: usize,
    pub bpe_merges: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            embed_dim: 64,
            hidden_dim: 128,
            dropout: 0.2,
            lambda: 0.1,
            seed: 1,
            epochs: 10,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            init_scale: DEFAULT_INIT_SCALE,
            sync_every: 100,
            workers: 1,
            threads: 1,
            src_vocab_size: 30_000,
            stem_vocab_size: 30_000,
            suffix_vocab_size: 30_000,
            bpe_merges: 10_000,
        }
    }
}

macro_rules! config_keys {
    ($($key:ident),* $(,)?) => {
        impl TrainConfig {
            /// Sets one field from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $(stringify!($key) => {
                        self.$key = value.parse().map_err(|_| {
                            Error::InvalidArgument(format!("bad value {value:?} for {key}"))
                        })?;
                    })*
                    _ => return Err(Error::InvalidArgument(format!("unknown config key {key:?}"))),
                }
                Ok(())
            }

            pub fn to_text(&self) -> String {
                let mut s = String::new();
                $(let _ = writeln!(s, "{} = {}", stringify!($key), self.$key);)*
                s
            }
        }
    };
}

config_keys!(
    embed_dim,
    hidden_dim,
    dropout,
    lambda,
    seed,
    epochs,
    batch_size,
    learning_rate,
    beta1,
    beta2,
    epsilon,
    init_scale,
    sync_every,
    workers,
    threads,
    src_vocab_size,
    stem_vocab_size,
    suffix_vocab_size,
    bpe_merges,
);

impl TrainConfig {
    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse("train config", i + 1, "expected key = value"))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|e| Error::parse("train config", i + 1, e.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.sync_every == 0 || self.workers == 0 {
            return Err(Error::InvalidArgument(
                "epochs, batch_size, sync_every and workers must be positive".into(),
            ));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("threads must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!("lambda {} not in [0, 1]", self.lambda)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidArgument(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn model_config(&self, src_vocab: usize, stem_vocab: usize, suffix_vocab: usize) -> ModelConfig {
        ModelConfig {
            src_vocab,
            stem_vocab,
            suffix_vocab,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            dropout_rate: self.dropout,
            lambda: self.lambda,
        }
    }

    /// Seed for worker `index`; worker 0 uses the run seed itself.
    pub fn worker_seed(&self, index: usize) -> u64 {
        if index == 0 {
            self.seed
        } else {
            let mut r = Rng::with_stream(self.seed, 1_000 + index as u64);
            r.next_u64()
        }
    }
}
