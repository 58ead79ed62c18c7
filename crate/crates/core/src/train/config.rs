use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// How dropout masks are drawn during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedPolicy {
    /// A fresh mask set for every sample at every step.
    PerSample,
    /// One mask set shared by all samples of a mini-batch.
    PerBatch,
}

impl FromStr for SeedPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_sample" => Ok(Self::PerSample),
            "per_batch" => Ok(Self::PerBatch),
            other => Err(invalid(format!("unknown mc_train_seed_policy `{other}`"))),
        }
    }
}

impl fmt::Display for SeedPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PerSample => "per_sample",
            Self::PerBatch => "per_batch",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub epochs: usize,
    pub rng_seed: u64,
    pub t_p: usize,
    pub t_f: usize,
    pub stride: usize,
    pub hidden_size: usize,
    pub mc_train_seed_policy: SeedPolicy,
    pub grad_clip: f64,
    /// Cap on training windows; 0 disables the cap.
    pub max_windows: usize,
}

impl Default for TrainConfig {
    /// Desk-scale defaults.
    fn default() -> Self {
        Self {
            learning_rate: 0.0005,
            weight_decay: 0.0001,
            batch_size: 16,
            dropout_rate: 0.5,
            epochs: 50,
            rng_seed: 0,
            t_p: 50,
            t_f: 50,
            stride: 10,
            hidden_size: crate::model::DEFAULT_HIDDEN,
            mc_train_seed_policy: SeedPolicy::PerSample,
            grad_clip: 5.0,
            max_windows: 10_000,
        }
    }
}

impl TrainConfig {
    /// Full-scale network and batch size.
    pub fn full_scale() -> Self {
        Self { batch_size: 128, hidden_size: crate::model::FULL_HIDDEN, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(invalid("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(invalid("dropout_rate must lie in [0, 1)"));
        }
        if self.batch_size < 1 {
            return Err(invalid("batch_size must be at least 1"));
        }
        if self.weight_decay < 0.0 {
            return Err(invalid("weight_decay must be non-negative"));
        }
        if self.hidden_size < 1 {
            return Err(invalid("hidden_size must be at least 1"));
        }
        Ok(())
    }

    /// Sets one field from its `key=value` text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn p<V: FromStr>(key: &str, value: &str) -> Result<V> {
            value.parse().map_err(|_| invalid(format!("bad value `{value}` for `{key}`")))
        }
        match key {
            "learning_rate" => self.learning_rate = p(key, value)?,
            "weight_decay" => self.weight_decay = p(key, value)?,
            "batch_size" => self.batch_size = p(key, value)?,
            "dropout_rate" => self.dropout_rate = p(key, value)?,
            "epochs" => self.epochs = p(key, value)?,
            "rng_seed" => self.rng_seed = p(key, value)?,
            "t_p" => self.t_p = p(key, value)?,
            "t_f" => self.t_f = p(key, value)?,
            "stride" => self.stride = p(key, value)?,
            "hidden_size" => self.hidden_size = p(key, value)?,
            "mc_train_seed_policy" => self.mc_train_seed_policy = value.parse()?,
            "grad_clip" => self.grad_clip = p(key, value)?,
            "max_windows" => self.max_windows = p(key, value)?,
            other => return Err(invalid(format!("unknown train config key `{other}`"))),
        }
        Ok(())
    }

    pub const KEYS: [&'static str; 13] = [
        "learning_rate",
        "weight_decay",
        "batch_size",
        "dropout_rate",
        "epochs",
        "rng_seed",
        "t_p",
        "t_f",
        "stride",
        "hidden_size",
        "mc_train_seed_policy",
        "grad_clip",
        "max_windows",
    ];

    /// `key=value` lines in a fixed order.
    pub fn to_kv_lines(&self) -> Vec<String> {
        vec![
            format!("learning_rate={}", self.learning_rate),
            format!("weight_decay={}", self.weight_decay),
            format!("batch_size={}", self.batch_size),
            format!("dropout_rate={}", self.dropout_rate),
            format!("epochs={}", self.epochs),
            format!("rng_seed={}", self.rng_seed),
            format!("t_p={}", self.t_p),
            format!("t_f={}", self.t_f),
            format!("stride={}", self.stride),
            format!("hidden_size={}", self.hidden_size),
            format!("mc_train_seed_policy={}", self.mc_train_seed_policy),
            format!("grad_clip={}", self.grad_clip),
            format!("max_windows={}", self.max_windows),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c = TrainConfig::default();
        assert_eq!(c.learning_rate, 0.0005);
        assert_eq!(c.weight_decay, 0.0001);
        assert!(c.validate().is_ok());
        assert_eq!(TrainConfig::full_scale().batch_size, 128);
        let mut bad = c.clone();
        bad.dropout_rate = 1.0;
        assert!(bad.validate().is_err());
        bad = c.clone();
        bad.learning_rate = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn kv_round_trip() {
        let mut c = TrainConfig::default();
        c.set("epochs", "7").unwrap();
        c.set("mc_train_seed_policy", "per_batch").unwrap();
        let mut d = TrainConfig::default();
        for line in c.to_kv_lines() {
            let (k, v) = line.split_once('=').unwrap();
            d.set(k, v).unwrap();
        }
        assert_eq!(c, d);
        assert!(d.set("nope", "1").is_err());
    }
}
