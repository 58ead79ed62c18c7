//! Versioned text checkpoint. Values use shortest round-trip formatting, so
//! save → load is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::data::{MotionSequence, NormalizationStats, Pose};
use crate::error::{shape, Error, Result};
use crate::model::dropout::DropoutMaskSet;
use crate::model::forward::{predict_once, predict_with_masks, McEnsemble, ProbabilisticPrediction};
use crate::model::params::ModelParams;
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &str = "PMCKPT v1";

/// Trained model plus the normalization it was trained under.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T = f64> {
    pub params: ModelParams<T>,
    pub stats: NormalizationStats<T>,
    pub frame_rate_hz: T,
    pub t_p: usize,
    pub t_f: usize,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn write_values<T: Scalar>(out: &mut String, values: &[T]) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

impl<T: Scalar> Checkpoint<T> {
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        writeln!(out, "{CHECKPOINT_MAGIC}").unwrap();
        writeln!(
            out,
            "n_joints={} hidden={} dropout_rate={} frame_rate={} t_p={} t_f={}",
            p.n_joints, p.hidden, p.dropout_rate, self.frame_rate_hz, self.t_p, self.t_f
        )
        .unwrap();
        writeln!(out, "stats.mean {}", self.stats.mean.len()).unwrap();
        write_values(&mut out, &self.stats.mean);
        writeln!(out, "stats.scale {}", self.stats.scale.len()).unwrap();
        write_values(&mut out, &self.stats.scale);
        for (name, t) in p.tensors() {
            writeln!(out, "tensor {name} {} {}", t.rows, t.cols).unwrap();
            write_values(&mut out, &t.data);
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| lines.next().ok_or_else(|| perr(0, format!("unexpected end of checkpoint, expected {what}")));
        let (ln, magic) = next("header")?;
        if magic.trim() != CHECKPOINT_MAGIC {
            return Err(perr(ln, format!("expected `{CHECKPOINT_MAGIC}`")));
        }
        let (ln, meta) = next("metadata")?;
        let mut kv = std::collections::HashMap::new();
        for tok in meta.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| perr(ln, format!("bad field `{tok}`")))?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| perr(ln, format!("missing `{k}`")));
        let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| perr(ln, format!("bad `{k}`"))) };
        let n_joints = num("n_joints")?;
        let hidden = num("hidden")?;
        let t_p = num("t_p")?;
        let t_f = num("t_f")?;
        let dropout_rate: T = get("dropout_rate")?.parse().map_err(|_| perr(ln, "bad dropout_rate"))?;
        let frame_rate_hz: T = get("frame_rate")?.parse().map_err(|_| perr(ln, "bad frame_rate"))?;

        let mut read_block = |expect: &str, rows_cols: Option<(usize, usize)>| -> Result<Vec<T>> {
            let (ln, head) = next(expect)?;
            let toks: Vec<&str> = head.split_whitespace().collect();
            let len = match rows_cols {
                None => {
                    if toks.len() != 2 || toks[0] != expect {
                        return Err(perr(ln, format!("expected `{expect}`")));
                    }
                    toks[1].parse::<usize>().map_err(|_| perr(ln, "bad length"))?
                }
                Some((r, c)) => {
                    if toks.len() != 4 || toks[0] != "tensor" || toks[1] != expect {
                        return Err(perr(ln, format!("expected tensor `{expect}`")));
                    }
                    let rr: usize = toks[2].parse().map_err(|_| perr(ln, "bad rows"))?;
                    let cc: usize = toks[3].parse().map_err(|_| perr(ln, "bad cols"))?;
                    if (rr, cc) != (r, c) {
                        return Err(perr(ln, format!("tensor `{expect}` is {rr}x{cc}, expected {r}x{c}")));
                    }
                    r * c
                }
            };
            let (ln, body) = next("values")?;
            let vals = body
                .split_whitespace()
                .map(|t| t.parse::<T>().map_err(|_| perr(ln, format!("bad value `{t}`"))))
                .collect::<Result<Vec<T>>>()?;
            if vals.len() != len {
                return Err(perr(ln, format!("expected {len} values, found {}", vals.len())));
            }
            Ok(vals)
        };
        let mean = read_block("stats.mean", None)?;
        let scale = read_block("stats.scale", None)?;
        if mean.len() != 3 * n_joints || scale.len() != 3 * n_joints {
            return Err(shape("normalization stats do not match joint count"));
        }
        let mut params = ModelParams::zeros(n_joints, hidden, dropout_rate);
        for (name, t) in params.tensors_mut() {
            t.data = read_block(&name, Some((t.rows, t.cols)))?;
        }
        match lines.next() {
            Some((_, l)) if l.trim() == "end" => {}
            Some((ln, _)) => return Err(perr(ln, "expected `end`")),
            None => return Err(perr(0, "missing `end`")),
        }
        Ok(Self { params, stats: NormalizationStats { mean, scale }, frame_rate_hz, t_p, t_f })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the serialized checkpoint, lowercase hex.
    pub fn model_hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// One stochastic pass on a meter-space window; returns a meter-space prediction.
    pub fn predict_once(&self, observed: &MotionSequence<T>, mask_seed: u64, t_f: usize) -> Result<ProbabilisticPrediction<T>> {
        let normed = self.stats.normalize(observed)?;
        let pred = predict_once(&self.params, mask_seed, &normed, t_f)?;
        self.to_meters(pred)
    }

    /// Dropout-free pass (every mask entry kept) on a meter-space window.
    pub fn predict_deterministic(&self, observed: &MotionSequence<T>, t_f: usize) -> Result<ProbabilisticPrediction<T>> {
        let normed = self.stats.normalize(observed)?;
        let masks = DropoutMaskSet::all_keep(self.params.n_joints, self.params.hidden);
        let pred = predict_with_masks(&self.params, &masks, &normed, t_f, 0)?;
        self.to_meters(pred)
    }

    /// `n` meter-space predictions with seeds `base_seed..base_seed+n`.
    pub fn mc_sample(&self, observed: &MotionSequence<T>, n: usize, t_f: usize, base_seed: u64) -> Result<McEnsemble<T>> {
        if n < 2 {
            return Err(crate::error::invalid(format!("MC sampling needs at least 2 samples, got {n}")));
        }
        let normed = self.stats.normalize(observed)?;
        let members = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let p = predict_once(&self.params, base_seed.wrapping_add(i), &normed, t_f)?;
                self.to_meters(p)
            })
            .collect::<Result<Vec<_>>>()?;
        McEnsemble::new(members)
    }

    fn to_meters(&self, pred: ProbabilisticPrediction<T>) -> Result<ProbabilisticPrediction<T>> {
        let mean_frames = pred
            .mean_frames
            .iter()
            .map(|p| self.stats.denormalize_pose(p))
            .collect::<Result<Vec<Pose<T>>>>()?;
        let sigma = pred
            .sigma
            .iter()
            .map(|row| row.iter().enumerate().map(|(j, s)| *s * self.stats.joint_scale(j)).collect())
            .collect();
        Ok(ProbabilisticPrediction { mean_frames, sigma, mask_seed: pred.mask_seed })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ckpt() -> Checkpoint<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = ModelParams::random(2, 3, 0.5, &mut rng).unwrap();
        let stats = NormalizationStats { mean: vec![0.1, 0.2, 1.0 / 3.0, -4.0, 5.0, 6e-9], scale: vec![1.0, 2.0, 3.0, 0.7, 0.1, 9.0] };
        Checkpoint { params, stats, frame_rate_hz: 25.0, t_p: 10, t_f: 5 }
    }

    #[test]
    fn round_trip_bit_exact() {
        let c = ckpt();
        let back = Checkpoint::<f64>::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.model_hash(), c.model_hash());
        assert_eq!(c.model_hash().len(), 64);
    }

    #[test]
    fn rejects_corruption() {
        let text = ckpt().to_text();
        assert!(Checkpoint::<f64>::from_text(&text.replace("PMCKPT v1", "PMCKPT v0")).is_err());
        assert!(Checkpoint::<f64>::from_text(&text.replace("tensor head.w 8 3", "tensor head.w 8 4")).is_err());
        assert!(Checkpoint::<f64>::from_text(&text.replace("\nend\n", "\n")).is_err());
    }
}
