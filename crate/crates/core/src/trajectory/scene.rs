use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Vec3};
use crate::trajectory::cost::{PlanConfig, Trajectory};

/// Planning problem read from a scene file.
///
/// ```text
/// # comment
/// start=0 0 0
/// goal=2 0 0
/// T_r=30
/// gaussian=1 0.05 0 0.15   # x y z sigma, repeatable
/// w_obstacle=10            # any PlanConfig key
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct Scene<T = f64> {
    pub start: Vec3<T>,
    pub goal: Vec3<T>,
    pub n_waypoints: usize,
    pub config: PlanConfig,
    /// Static obstacles `(mean, sigma)`.
    pub gaussians: Vec<(Vec3<T>, T)>,
}

impl<T: Scalar> Scene<T> {
    pub fn initial_trajectory(&self) -> Result<Trajectory<T>> {
        Trajectory::straight_line(self.start, self.goal, self.n_waypoints)
    }
}

fn floats<T: Scalar>(line: usize, v: &str, n: usize) -> Result<Vec<T>> {
    let out = v
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| Error::Parse { line, msg: format!("bad number `{t}`") }))
        .collect::<Result<Vec<T>>>()?;
    if out.len() != n || out.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parse { line, msg: format!("expected {n} finite numbers") });
    }
    Ok(out)
}

pub fn parse_scene<T: Scalar>(text: &str) -> Result<Scene<T>> {
    let mut start = None;
    let mut goal = None;
    let mut n_waypoints = None;
    let mut config = PlanConfig::default();
    let mut gaussians = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::Parse { line, msg: format!("expected key=value, got `{body}`") })?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "start" | "goal" => {
                let f = floats::<T>(line, v, 3)?;
                let p = [f[0], f[1], f[2]];
                if k == "start" { start = Some(p) } else { goal = Some(p) }
            }
            "T_r" => {
                n_waypoints = Some(v.parse::<usize>().map_err(|_| Error::Parse { line, msg: format!("bad T_r `{v}`") })?)
            }
            "gaussian" => {
                let f = floats::<T>(line, v, 4)?;
                if !(f[3] > T::zero()) {
                    return Err(Error::Parse { line, msg: "gaussian sigma must be positive".into() });
                }
                gaussians.push(([f[0], f[1], f[2]], f[3]));
            }
            _ => config.set(k, v).map_err(|e| Error::Parse { line, msg: e.to_string() })?,
        }
    }
    let missing = |k: &str| Error::Parse { line: 0, msg: format!("scene is missing `{k}`") };
    let scene = Scene {
        start: start.ok_or_else(|| missing("start"))?,
        goal: goal.ok_or_else(|| missing("goal"))?,
        n_waypoints: n_waypoints.ok_or_else(|| missing("T_r"))?,
        config,
        gaussians,
    };
    if scene.n_waypoints < 3 {
        return Err(Error::Parse { line: 0, msg: "T_r must be at least 3".into() });
    }
    scene.config.validate().map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
    Ok(scene)
}

/// `step,x,y,z,field_value,cost_running`
pub fn format_plan_csv<T: Scalar>(traj: &Trajectory<T>, field_values: &[T], step_costs: &[T]) -> String {
    let mut out = String::from("step,x,y,z,field_value,cost_running\n");
    let mut running = T::zero();
    for (k, ((p, f), c)) in traj.waypoints.iter().zip(field_values).zip(step_costs).enumerate() {
        running += *c;
        writeln!(out, "{k},{},{},{},{},{}", p[0], p[1], p[2], f, running).unwrap();
    }
    out
}
