use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{zero_velocity_baseline, Pose, WindowPair};
use crate::error::{invalid, Result};
use crate::eval::metrics::mpjpe;
use crate::eval::report::{EvalReport, EvalRow};
use crate::model::{Checkpoint, McEnsemble};
use crate::scalar::Scalar;
use crate::uncertainty::{
    detect_unseen, epistemic_variance, select_optimal, trustworthy_length, DetectorCalibration, Verdict,
    DEFAULT_E_MAX, DEFAULT_LAMBDA,
};

pub const DEFAULT_MILESTONES_MS: [f64; 5] = [400.0, 800.0, 1200.0, 1600.0, 2000.0];

/// Predictor variants compared in a report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Repeat the last observed pose.
    ZeroVelocity,
    /// Single dropout-free pass of the trained model.
    Deterministic,
    /// MC ensemble, no gating.
    Fmp,
    /// MC ensemble gated by epistemic uncertainty.
    FmpUmd,
    /// Gated ensemble reduced to its least-uncertain member.
    FmpUmdOms,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::ZeroVelocity, Method::Deterministic, Method::Fmp, Method::FmpUmd, Method::FmpUmdOms];

    pub fn name(self) -> &'static str {
        match self {
            Method::ZeroVelocity => "zerovel",
            Method::Deterministic => "det",
            Method::Fmp => "fmp",
            Method::FmpUmd => "fmp_umd",
            Method::FmpUmdOms => "fmp_umd_oms",
        }
    }

    pub fn needs_model(self) -> bool {
        self != Method::ZeroVelocity
    }

    pub fn gates(self) -> bool {
        matches!(self, Method::FmpUmd | Method::FmpUmdOms)
    }

    pub fn samples(self) -> bool {
        matches!(self, Method::Fmp | Method::FmpUmd | Method::FmpUmdOms)
    }

    /// Parses `zerovel+fmp,fmp_umd`-style lists.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let v = s
            .split(['+', ','])
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Method::from_str)
            .collect::<Result<Vec<_>>>()?;
        if v.is_empty() {
            return Err(invalid("no evaluation methods given"));
        }
        Ok(v)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown method `{s}` (expected zerovel, det, fmp, fmp_umd, fmp_umd_oms)")))
    }
}

/// How an ensemble without the selector is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EnsembleErrorMode {
    /// Error of the ensemble-mean prediction.
    #[default]
    MeanPrediction,
    /// Mean of the per-member errors.
    MeanOfErrors,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalSettings {
    pub milestones_ms: Vec<f64>,
    pub n_samples: usize,
    pub base_seed: u64,
    pub lambda: f64,
    pub e_max: f64,
    /// Drop selector predictions past their trustworthy length.
    pub truncate: bool,
    pub error_mode: EnsembleErrorMode,
    pub train_set: String,
    pub test_set: String,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            milestones_ms: DEFAULT_MILESTONES_MS.to_vec(),
            n_samples: crate::model::DEFAULT_MC_SAMPLES,
            base_seed: 0,
            lambda: DEFAULT_LAMBDA,
            e_max: DEFAULT_E_MAX,
            truncate: false,
            error_mode: EnsembleErrorMode::MeanPrediction,
            train_set: "-".into(),
            test_set: "-".into(),
        }
    }
}

/// Nearest frame count for a milestone in milliseconds.
pub fn milestone_frames(ms: f64, frame_rate_hz: f64) -> usize {
    (ms * frame_rate_hz / 1000.0).round().max(0.0) as usize
}

/// Per-window, per-method outcome: `None` when the window is rejected.
type WindowOutcome = Vec<Option<Vec<Option<f64>>>>;

fn errors_at<T: Scalar>(pred: &[Pose<T>], truth: &[Pose<T>], frames: &[usize], limit: usize) -> Result<Vec<Option<f64>>> {
    frames
        .iter()
        .map(|&f| {
            if f == 0 || f > limit || f > pred.len() || f > truth.len() {
                Ok(None)
            } else {
                Ok(Some(mpjpe(pred, truth, f)?.as_f64()))
            }
        })
        .collect()
}

fn ensemble_errors<T: Scalar>(
    e: &McEnsemble<T>,
    truth: &[Pose<T>],
    frames: &[usize],
    mode: EnsembleErrorMode,
) -> Result<Vec<Option<f64>>> {
    match mode {
        EnsembleErrorMode::MeanPrediction => errors_at(&e.mean_prediction(), truth, frames, usize::MAX),
        EnsembleErrorMode::MeanOfErrors => {
            let per = e
                .members
                .iter()
                .map(|m| errors_at(&m.mean_frames, truth, frames, usize::MAX))
                .collect::<Result<Vec<_>>>()?;
            let n = per.len() as f64;
            Ok((0..frames.len())
                .map(|k| per.iter().map(|p| p[k]).sum::<Option<f64>>().map(|s| s / n))
                .collect())
        }
    }
}

fn evaluate_window<T: Scalar>(
    idx: usize,
    w: &WindowPair<T>,
    methods: &[Method],
    model: Option<&Checkpoint<T>>,
    calib: Option<&DetectorCalibration<T>>,
    frames: &[usize],
    s: &EvalSettings,
) -> Result<WindowOutcome> {
    let t_f = w.future.len();
    let truth = &w.future.frames;
    let ensemble = if methods.iter().any(|m| m.samples()) {
        let seed = s.base_seed.wrapping_add((idx as u64).wrapping_mul(s.n_samples as u64));
        Some(model.expect("checked").mc_sample(&w.observed, s.n_samples, t_f, seed)?)
    } else {
        None
    };
    let verdict = match (&ensemble, calib) {
        (Some(e), Some(c)) if methods.iter().any(|m| m.gates()) => Some(detect_unseen(&epistemic_variance(e)?, c)),
        _ => None,
    };
    methods
        .iter()
        .map(|m| {
            if m.gates() && verdict == Some(Verdict::Reject) {
                return Ok(None);
            }
            let errs = match m {
                Method::ZeroVelocity => {
                    let base = zero_velocity_baseline(&w.observed, t_f)?;
                    errors_at(&base.frames, truth, frames, usize::MAX)?
                }
                Method::Deterministic => {
                    let p = model.expect("checked").predict_deterministic(&w.observed, t_f)?;
                    errors_at(&p.mean_frames, truth, frames, usize::MAX)?
                }
                Method::Fmp | Method::FmpUmd => ensemble_errors(ensemble.as_ref().expect("sampled"), truth, frames, s.error_mode)?,
                Method::FmpUmdOms => {
                    let e = ensemble.as_ref().expect("sampled");
                    let best = &e.members[select_optimal(e)];
                    let limit = if s.truncate {
                        trustworthy_length(&best.sigma, T::lit(s.lambda), T::lit(s.e_max))?
                    } else {
                        usize::MAX
                    };
                    errors_at(&best.mean_frames, truth, frames, limit)?
                }
            };
            Ok(Some(errs))
        })
        .collect()
}

/// Runs every method over every window and aggregates in window order.
pub fn evaluate<T: Scalar>(
    methods: &[Method],
    model: Option<&Checkpoint<T>>,
    calibration: Option<&DetectorCalibration<T>>,
    test_windows: &[WindowPair<T>],
    settings: &EvalSettings,
) -> Result<EvalReport> {
    if test_windows.is_empty() {
        return Err(invalid("test set is empty"));
    }
    if methods.is_empty() {
        return Err(invalid("no evaluation methods given"));
    }
    if methods.iter().any(|m| m.needs_model()) && model.is_none() {
        return Err(invalid("model-based methods need a checkpoint"));
    }
    if methods.iter().any(|m| m.gates()) && calibration.is_none() {
        return Err(invalid("gating methods need a calibration"));
    }
    if methods.iter().any(|m| m.samples()) && settings.n_samples < 2 {
        return Err(invalid("ensemble methods need at least 2 samples"));
    }
    if settings.milestones_ms.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(invalid("milestones must be positive milliseconds"));
    }
    let rate = test_windows[0].future.frame_rate_hz.as_f64();
    if test_windows.iter().any(|w| w.future.frame_rate_hz.as_f64() != rate) {
        return Err(invalid("test windows disagree on frame rate"));
    }
    let frames: Vec<usize> = settings.milestones_ms.iter().map(|ms| milestone_frames(*ms, rate)).collect();

    let outcomes = test_windows
        .par_iter()
        .enumerate()
        .map(|(i, w)| evaluate_window(i, w, methods, model, calibration, &frames, settings))
        .collect::<Result<Vec<WindowOutcome>>>()?;

    let rows = methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let mut accepted = 0usize;
            let mut sums = vec![(0.0f64, 0usize); frames.len()];
            for o in &outcomes {
                if let Some(errs) = &o[k] {
                    accepted += 1;
                    for (acc, e) in sums.iter_mut().zip(errs) {
                        if let Some(e) = e {
                            acc.0 += e;
                            acc.1 += 1;
                        }
                    }
                }
            }
            let rejected = outcomes.len() - accepted;
            EvalRow {
                method: m.name().to_string(),
                train_set: settings.train_set.clone(),
                test_set: settings.test_set.clone(),
                det_pct: m.gates().then(|| 100.0 * rejected as f64 / outcomes.len() as f64),
                mpjpe: sums.iter().map(|(s, n)| (*n > 0).then(|| s / *n as f64)).collect(),
                accepted,
                rejected,
            }
        })
        .collect();
    Ok(EvalReport { milestones_ms: settings.milestones_ms.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MotionSequence;

    fn const_window(n_obs: usize, n_fut: usize) -> WindowPair {
        let p = Pose::from_coords(vec![0.3, -0.2, 1.1, 0.0, 0.5, 0.9]).unwrap();
        WindowPair {
            observed: MotionSequence::new(vec![p.clone(); n_obs], 25.0, "c").unwrap(),
            future: MotionSequence::new(vec![p; n_fut], 25.0, "c").unwrap(),
            offset: 0,
        }
    }

    #[test]
    fn zero_velocity_on_static_data() {
        let ws = vec![const_window(10, 50); 3];
        let r = evaluate::<f64>(&[Method::ZeroVelocity], None, None, &ws, &EvalSettings::default()).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].mpjpe, vec![Some(0.0); 5]);
        assert_eq!(r.rows[0].accepted, 3);
        assert_eq!(r.rows[0].det_pct, None);
    }

    #[test]
    fn milestones_beyond_horizon_are_absent() {
        let ws = vec![const_window(10, 12)];
        let r = evaluate::<f64>(&[Method::ZeroVelocity], None, None, &ws, &EvalSettings::default()).unwrap();
        assert_eq!(r.rows[0].mpjpe, vec![Some(0.0), None, None, None, None]);
    }

    #[test]
    fn argument_errors() {
        let s = EvalSettings::default();
        assert!(evaluate::<f64>(&[Method::ZeroVelocity], None, None, &[], &s).is_err());
        assert!(evaluate::<f64>(&[Method::Fmp], None, None, &[const_window(5, 5)], &s).is_err());
    }

    #[test]
    fn milestone_rounding() {
        assert_eq!(milestone_frames(400.0, 25.0), 10);
        assert_eq!(milestone_frames(2000.0, 25.0), 50);
        assert_eq!(milestone_frames(410.0, 25.0), 10);
        assert_eq!(milestone_frames(430.0, 25.0), 11);
    }

    #[test]
    fn method_names() {
        let v = Method::parse_list("zerovel+fmp+fmp_umd+fmp_umd_oms").unwrap();
        assert_eq!(v, vec![Method::ZeroVelocity, Method::Fmp, Method::FmpUmd, Method::FmpUmdOms]);
        assert!(Method::parse_list("zerovel+bogus").is_err());
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
    }
}
