//! MPJPE, gated evaluation of predictor variants, and report rendering.

mod harness;
mod metrics;
mod report;

pub use harness::{evaluate, milestone_frames, EnsembleErrorMode, EvalSettings, Method, DEFAULT_MILESTONES_MS};
pub use metrics::{mpjpe, per_frame_errors};
pub use report::{format_cell, render_csv, render_table, EvalReport, EvalRow};
