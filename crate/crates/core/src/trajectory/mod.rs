//! Collision-averse point-robot planning against the predicted human
//! occupancy: a sphere-capture probability field and CHOMP-style descent.

mod cost;
mod field;
mod optimize;
mod scene;

pub use cost::{plan_cost, step_costs, CostBreakdown, PlanConfig, Trajectory};
pub use field::{
    collision_probability_profile, field_value, field_value_interp, sphere_capture_probability, GaussianSet,
    ProbabilityProfile, UncertaintyField, DEFAULT_GROWTH,
};
pub use optimize::{optimize, IterationRecord, PlanLog, FD_STEP, MIN_STEP};
pub use scene::{format_plan_csv, parse_scene, Scene};
