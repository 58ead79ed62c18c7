use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::MotionSequence;
use crate::error::{invalid, Error, Result};
use crate::model::Checkpoint;
use crate::scalar::Scalar;
use crate::uncertainty::epistemic::{epistemic_variance, EpistemicReport};

/// Threshold on the scalar epistemic uncertainty.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorCalibration<T = f64> {
    pub threshold: T,
    pub quantile: T,
    pub calibration_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        })
    }
}

/// 1-based order-statistic index `⌈q·M⌉` clamped to `[1, M]`.
///
/// The ceiling keeps the self-acceptance rate `(k−1)/M` within `1/M` of `q`.
pub fn order_statistic_index(quantile: f64, m: usize) -> usize {
    let k = (quantile * m as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(m)
}

/// Threshold from precomputed scores.
pub fn threshold_from_scores<T: Scalar>(scores: &[T], quantile: f64) -> Result<DetectorCalibration<T>> {
    if scores.len() < 2 {
        return Err(invalid(format!("calibration needs at least 2 windows, got {}", scores.len())));
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(invalid("quantile must lie in (0, 1]"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(invalid("calibration scores must be finite"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let k = order_statistic_index(quantile, sorted.len());
    Ok(DetectorCalibration { threshold: sorted[k - 1], quantile: T::lit(quantile), calibration_size: sorted.len() })
}

/// Scalar epistemic uncertainty of each window under `n` MC samples.
///
/// Window `i` uses seeds starting at `base_seed + i·n`.
pub fn calibration_scores<T: Scalar>(
    model: &Checkpoint<T>,
    windows: &[MotionSequence<T>],
    n: usize,
    t_f: usize,
    base_seed: u64,
) -> Result<Vec<T>> {
    windows
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let seed = base_seed.wrapping_add((i as u64).wrapping_mul(n as u64));
            let e = model.mc_sample(w, n, t_f, seed)?;
            Ok(epistemic_variance(&e)?.scalar_eu)
        })
        .collect()
}

/// Scores each calibration window and takes the `q` order statistic.
pub fn calibrate_threshold<T: Scalar>(
    model: &Checkpoint<T>,
    windows: &[MotionSequence<T>],
    n: usize,
    t_f: usize,
    quantile: f64,
    base_seed: u64,
) -> Result<DetectorCalibration<T>> {
    if windows.is_empty() {
        return Err(invalid("calibration set is empty"));
    }
    threshold_from_scores(&calibration_scores(model, windows, n, t_f, base_seed)?, quantile)
}

/// Accept iff the scalar uncertainty is strictly below the threshold.
pub fn detect_unseen<T: Scalar>(report: &EpistemicReport<T>, calib: &DetectorCalibration<T>) -> Verdict {
    if report.scalar_eu < calib.threshold {
        Verdict::Accept
    } else {
        Verdict::Reject
    }
}

impl<T: Scalar> DetectorCalibration<T> {
    /// `threshold=<float> quantile=<float> M=<int> model_hash=<hex>`
    pub fn to_record(&self, model_hash: &str) -> String {
        format!(
            "threshold={} quantile={} M={} model_hash={}\n",
            self.threshold, self.quantile, self.calibration_size, model_hash
        )
    }

    /// Parses a record; returns the calibration and its model hash.
    pub fn from_record(text: &str) -> Result<(Self, String)> {
        let line = text.lines().find(|l| !l.trim().is_empty()).ok_or_else(|| Error::Parse { line: 1, msg: "empty calibration file".into() })?;
        let mut threshold = None;
        let mut quantile = None;
        let mut m = None;
        let mut hash = None;
        for tok in line.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| Error::Parse { line: 1, msg: format!("bad field `{tok}`") })?;
            let bad = || Error::Parse { line: 1, msg: format!("bad value for `{k}`") };
            match k {
                "threshold" => threshold = Some(T::from_str(v).map_err(|_| bad())?),
                "quantile" => quantile = Some(T::from_str(v).map_err(|_| bad())?),
                "M" => m = Some(usize::from_str(v).map_err(|_| bad())?),
                "model_hash" => hash = Some(v.to_string()),
                other => return Err(Error::Parse { line: 1, msg: format!("unknown field `{other}`") }),
            }
        }
        let missing = |k: &str| Error::Parse { line: 1, msg: format!("missing `{k}`") };
        Ok((
            Self {
                threshold: threshold.ok_or_else(|| missing("threshold"))?,
                quantile: quantile.ok_or_else(|| missing("quantile"))?,
                calibration_size: m.ok_or_else(|| missing("M"))?,
            },
            hash.ok_or_else(|| missing("model_hash"))?,
        ))
    }

    /// Parses a record and refuses it unless its hash matches `expected_hash`.
    pub fn from_record_checked(text: &str, expected_hash: &str) -> Result<Self> {
        let (c, h) = Self::from_record(text)?;
        if h != expected_hash {
            return Err(Error::HashMismatch { expected: expected_hash.to_string(), found: h });
        }
        Ok(c)
    }
}
