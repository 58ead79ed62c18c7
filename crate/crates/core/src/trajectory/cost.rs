use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::scalar::{norm3, norm_sq3, sub3, Scalar, Vec3};
use crate::trajectory::field::{field_time, field_value_interp, UncertaintyField, DEFAULT_GROWTH};

/// Point-robot path, one waypoint per planning step. The first and last
/// waypoints are pinned.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T = f64> {
    pub waypoints: Vec<Vec3<T>>,
    pub goal: Vec3<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn new(waypoints: Vec<Vec3<T>>) -> Result<Self> {
        if waypoints.len() < 3 {
            return Err(invalid(format!("a trajectory needs at least 3 waypoints, got {}", waypoints.len())));
        }
        if waypoints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("waypoints must be finite"));
        }
        let goal = *waypoints.last().expect("non-empty");
        Ok(Self { waypoints, goal })
    }

    /// `n` evenly spaced waypoints from `start` to `goal`.
    pub fn straight_line(start: Vec3<T>, goal: Vec3<T>, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(invalid(format!("a trajectory needs at least 3 waypoints, got {n}")));
        }
        let last = T::from_usize_lossy(n - 1);
        Self::new(
            (0..n)
                .map(|k| {
                    let a = T::from_usize_lossy(k) / last;
                    std::array::from_fn(|c| start[c] + (goal[c] - start[c]) * a)
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanConfig {
    pub w_obstacle: f64,
    pub w_smooth: f64,
    pub w_goal: f64,
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop once the relative cost improvement falls below this.
    pub tolerance: f64,
    pub safety_radius: f64,
    /// Profile values at or above this count as unsafe in summaries.
    pub collision_threshold: f64,
    pub growth_factor: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            w_obstacle: 10.0,
            w_smooth: 1.0,
            w_goal: 0.0,
            step_size: 0.05,
            max_iters: 200,
            tolerance: 1e-6,
            safety_radius: 0.15,
            collision_threshold: 0.05,
            growth_factor: DEFAULT_GROWTH,
        }
    }
}

impl PlanConfig {
    pub const KEYS: [&'static str; 9] = [
        "w_obstacle",
        "w_smooth",
        "w_goal",
        "step_size",
        "max_iters",
        "tolerance",
        "safety_radius",
        "collision_threshold",
        "growth_factor",
    ];

    pub fn validate(&self) -> Result<()> {
        let weights = [self.w_obstacle, self.w_smooth, self.w_goal];
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(invalid("cost weights must be finite and non-negative"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(invalid("step_size must be positive"));
        }
        if !(self.tolerance >= 0.0) || !(self.safety_radius >= 0.0) {
            return Err(invalid("tolerance and safety_radius must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.collision_threshold) {
            return Err(invalid("collision_threshold must lie in [0, 1]"));
        }
        if !(self.growth_factor >= 1.0) {
            return Err(invalid("growth_factor must be at least 1"));
        }
        Ok(())
    }

    /// Sets one field from its textual `key=value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let f = || value.parse::<f64>().map_err(|_| invalid(format!("bad value `{value}` for `{key}`")));
        match key {
            "w_obstacle" => self.w_obstacle = f()?,
            "w_smooth" => self.w_smooth = f()?,
            "w_goal" => self.w_goal = f()?,
            "step_size" => self.step_size = f()?,
            "max_iters" => {
                self.max_iters = value.parse().map_err(|_| invalid(format!("bad value `{value}` for `{key}`")))?
            }
            "tolerance" => self.tolerance = f()?,
            "safety_radius" => self.safety_radius = f()?,
            "collision_threshold" => self.collision_threshold = f()?,
            "growth_factor" => self.growth_factor = f()?,
            _ => return Err(invalid(format!("unknown plan key `{key}`"))),
        }
        Ok(())
    }

    pub fn to_kv_lines(&self) -> String {
        format!(
            "w_obstacle={}\nw_smooth={}\nw_goal={}\nstep_size={}\nmax_iters={}\ntolerance={}\nsafety_radius={}\ncollision_threshold={}\ngrowth_factor={}\n",
            self.w_obstacle,
            self.w_smooth,
            self.w_goal,
            self.step_size,
            self.max_iters,
            self.tolerance,
            self.safety_radius,
            self.collision_threshold,
            self.growth_factor
        )
    }
}

/// Weighted terms of the planning objective.
#[derive(Clone, Debug, PartialEq)]
pub struct CostBreakdown<T = f64> {
    /// Σ field value × local path length.
    pub obstacle: T,
    /// Σ squared second differences.
    pub smoothness: T,
    /// Squared distance of the final waypoint to the goal.
    pub goal: T,
    pub total: T,
}

/// Half the summed length of the segments touching waypoint `k`.
pub(crate) fn local_length<T: Scalar>(w: &[Vec3<T>], k: usize) -> T {
    let mut l = T::zero();
    if k > 0 {
        l += norm3(&sub3(&w[k], &w[k - 1]));
    }
    if k + 1 < w.len() {
        l += norm3(&sub3(&w[k + 1], &w[k]));
    }
    l * T::lit(0.5)
}

pub(crate) fn second_difference<T: Scalar>(w: &[Vec3<T>], k: usize) -> Vec3<T> {
    std::array::from_fn(|c| w[k + 1][c] - T::lit(2.0) * w[k][c] + w[k - 1][c])
}

/// Unweighted obstacle contribution of waypoint `k`.
pub(crate) fn obstacle_at<T: Scalar>(w: &[Vec3<T>], k: usize, field: &UncertaintyField<T>) -> T {
    if field.n_steps() == 0 {
        return T::zero();
    }
    field_value_interp(field, &w[k], field_time(field, k, w.len())) * local_length(w, k)
}

/// Weighted per-waypoint cost; the running sum of these is the total
/// (the goal term lands on the final waypoint).
pub fn step_costs<T: Scalar>(traj: &Trajectory<T>, field: &UncertaintyField<T>, config: &PlanConfig) -> Vec<T> {
    let w = &traj.waypoints;
    let n = w.len();
    let (wo, ws, wg) = (T::lit(config.w_obstacle), T::lit(config.w_smooth), T::lit(config.w_goal));
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut c = wo * obstacle_at(w, k, field);
            if k > 0 && k + 1 < n {
                c += ws * norm_sq3(&second_difference(w, k));
            }
            if k + 1 == n {
                c += wg * norm_sq3(&sub3(&w[k], &traj.goal));
            }
            c
        })
        .collect()
}

pub fn plan_cost<T: Scalar>(traj: &Trajectory<T>, field: &UncertaintyField<T>, config: &PlanConfig) -> CostBreakdown<T> {
    let w = &traj.waypoints;
    let n = w.len();
    let obstacle: T = (0..n).into_par_iter().map(|k| obstacle_at(w, k, field)).collect::<Vec<T>>().into_iter().sum();
    let smoothness: T = (1..n.saturating_sub(1)).map(|k| norm_sq3(&second_difference(w, k))).sum();
    let goal = w.last().map_or(T::zero(), |l| norm_sq3(&sub3(l, &traj.goal)));
    let total = T::lit(config.w_obstacle) * obstacle + T::lit(config.w_smooth) * smoothness + T::lit(config.w_goal) * goal;
    CostBreakdown { obstacle, smoothness, goal, total }
}
