//! Heteroscedastic likelihood objective, exact BPTT gradients, Adam with
//! decoupled weight decay, the training loop and a finite-difference checker.

mod adam;
mod backprop;
mod config;
mod gradcheck;
mod loss;
mod trainer;

pub use adam::{adam_step, OptimizerState};
pub use backprop::{loss_gradients, window_loss, LossAndGrad};
pub use config::{SeedPolicy, TrainConfig};
pub use gradcheck::{grad_check, grad_check_against, GradCheckReport, GRAD_CHECK_MAX_PARAMS};
pub use loss::{hetero_nll_loss, hetero_nll_terms, LossTerms, VARIANCE_FLOOR};
pub use trainer::{clip_global_norm, train, EpochRecord, TrainOutcome};
