//! Skeletal motion data: poses, sequences, windowing, normalization,
//! synthetic surrogate families and the zero-velocity baseline.

mod baseline;
mod io;
mod normalize;
mod pose;
mod synth;
mod window;

pub use baseline::zero_velocity_baseline;
pub use io::{format_motion, load_motion_file, parse_motion, save_motion_file};
pub use normalize::{fit_normalization, NormalizationStats};
pub use pose::{MotionSequence, Pose, DEFAULT_FRAME_RATE_HZ, DEFAULT_JOINTS};
pub use synth::{synth_generate, SynthFamily};
pub use window::{window_dataset, WindowPair, MAX_HORIZON_SECONDS};
