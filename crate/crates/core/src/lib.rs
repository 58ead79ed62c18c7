//! Probabilistic human-motion prediction with a Monte-Carlo-dropout recurrent
//! network, epistemic gating of unfamiliar inputs, aleatoric selection and
//! truncation of predictions, and collision-averse trajectory planning.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar type for common use.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod scalar;
pub mod tensor;
pub mod trajectory;
pub mod train;
pub mod uncertainty;

pub use error::{Error, Result};
pub use scalar::{Scalar, Vec3};

pub type Pose64 = data::Pose<f64>;
pub type Pose32 = data::Pose<f32>;
pub type Motion64 = data::MotionSequence<f64>;
pub type Motion32 = data::MotionSequence<f32>;
pub type Params64 = model::ModelParams<f64>;
pub type Params32 = model::ModelParams<f32>;
pub type Checkpoint64 = model::Checkpoint<f64>;
pub type Checkpoint32 = model::Checkpoint<f32>;
pub type Ensemble64 = model::McEnsemble<f64>;
pub type Ensemble32 = model::McEnsemble<f32>;
pub type Calibration64 = uncertainty::DetectorCalibration<f64>;
pub type Calibration32 = uncertainty::DetectorCalibration<f32>;
pub type Trajectory64 = trajectory::Trajectory<f64>;
pub type Trajectory32 = trajectory::Trajectory<f32>;
pub type Field64 = trajectory::UncertaintyField<f64>;
pub type Field32 = trajectory::UncertaintyField<f32>;
