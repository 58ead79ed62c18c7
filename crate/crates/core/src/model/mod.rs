//! Bayesian recurrent encoder–decoder predictor.

mod checkpoint;
mod dropout;
mod features;
pub(crate) mod forward;
mod gru;
mod params;

pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC};
pub use dropout::DropoutMaskSet;
pub use features::{dynamics_features, dynamics_into, DynamicsFeature};
pub use forward::{
    decode_step, encode, forward_pass, mc_sample, predict_once, predict_traced, predict_with_masks,
    DecodeOutput, ForwardTape, McEnsemble, ProbabilisticPrediction, StepTrace, LOG_VAR_MAX,
    LOG_VAR_MIN,
};
pub use gru::{GruCell, GruStepCache};
pub use params::{ModelParams, DEFAULT_HIDDEN, DEFAULT_MC_SAMPLES, FULL_HIDDEN};
