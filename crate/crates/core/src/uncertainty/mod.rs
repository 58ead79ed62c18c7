//! Epistemic-uncertainty gating and aleatoric optimal-sample selection.

mod calibration;
mod epistemic;
mod selection;

pub use calibration::{
    calibrate_threshold, calibration_scores, detect_unseen, order_statistic_index, threshold_from_scores, DetectorCalibration, Verdict,
};
pub use epistemic::{epistemic_variance, epistemic_variance_single_pass, EpistemicReport, NEGATIVE_SLACK};
pub use selection::{
    frame_sigma_max, select_and_truncate, select_optimal, trustworthy_length, SelectionResult, DEFAULT_E_MAX,
    DEFAULT_LAMBDA,
};
