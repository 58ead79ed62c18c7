use rayon::prelude::*;

use crate::scalar::{Scalar, Vec3};
use crate::trajectory::cost::{obstacle_at, plan_cost, second_difference, PlanConfig, Trajectory};
use crate::trajectory::field::UncertaintyField;

/// Central-difference step for the obstacle gradient, meters.
pub const FD_STEP: f64 = 1e-4;
/// Backtracking gives up below this step size.
pub const MIN_STEP: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord<T = f64> {
    pub iteration: usize,
    pub cost: T,
    pub step: f64,
}

/// Accepted iterations only; costs are non-increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanLog<T = f64> {
    pub initial_cost: T,
    pub iterations: Vec<IterationRecord<T>>,
}

impl<T: Scalar> PlanLog<T> {
    pub fn final_cost(&self) -> T {
        self.iterations.last().map_or(self.initial_cost, |r| r.cost)
    }
}

fn gradient<T: Scalar>(w: &[Vec3<T>], field: &UncertaintyField<T>, config: &PlanConfig) -> Vec<Vec3<T>> {
    let n = w.len();
    let ws = T::lit(config.w_smooth);
    let wo = T::lit(config.w_obstacle);
    let h = T::lit(FD_STEP);
    let two = T::lit(2.0);
    let a: Vec<Vec3<T>> = (0..n).map(|k| if k > 0 && k + 1 < n { second_difference(w, k) } else { [T::zero(); 3] }).collect();
    (0..n)
        .into_par_iter()
        .map(|k| {
            if k == 0 || k + 1 == n {
                return [T::zero(); 3];
            }
            let mut g: Vec3<T> = std::array::from_fn(|c| ws * two * (a[k - 1][c] - two * a[k][c] + a[k + 1][c]));
            if wo > T::zero() && field.n_steps() > 0 {
                let mut probe = w.to_vec();
                let local = |p: &[Vec3<T>]| (k - 1..=k + 1).map(|i| obstacle_at(p, i, field)).fold(T::zero(), |s, v| s + v);
                for c in 0..3 {
                    let orig = probe[k][c];
                    probe[k][c] = orig + h;
                    let up = local(&probe);
                    probe[k][c] = orig - h;
                    let down = local(&probe);
                    probe[k][c] = orig;
                    g[c] += wo * (up - down) / (two * h);
                }
            }
            g
        })
        .collect()
}

/// Gradient descent on interior waypoints with backtracking; endpoints never move.
pub fn optimize<T: Scalar>(traj: &Trajectory<T>, field: &UncertaintyField<T>, config: &PlanConfig) -> (Trajectory<T>, PlanLog<T>) {
    let mut current = traj.clone();
    let mut cost = plan_cost(&current, field, config).total;
    let mut log = PlanLog { initial_cost: cost, iterations: Vec::new() };
    let tol = config.tolerance;
    for iteration in 1..=config.max_iters {
        let g = gradient(&current.waypoints, field, config);
        if g.iter().flatten().all(|v| *v == T::zero()) {
            break;
        }
        let mut step = config.step_size;
        let accepted = loop {
            if step < MIN_STEP {
                break None;
            }
            let mut cand = current.clone();
            let s = T::lit(step);
            let n = cand.waypoints.len();
            for (p, d) in cand.waypoints[1..n - 1].iter_mut().zip(&g[1..n - 1]) {
                for c in 0..3 {
                    p[c] -= s * d[c];
                }
            }
            let c = plan_cost(&cand, field, config).total;
            if c < cost {
                break Some((cand, c));
            }
            step *= 0.5;
        };
        let Some((cand, c)) = accepted else { break };
        let rel = (cost - c).as_f64() / cost.as_f64().abs().max(f64::MIN_POSITIVE);
        current = cand;
        cost = c;
        log.iterations.push(IterationRecord { iteration, cost, step });
        if rel < tol {
            break;
        }
    }
    (current, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::field::collision_probability_profile;

    fn scene() -> (Trajectory, UncertaintyField, PlanConfig) {
        let t = Trajectory::straight_line([0.0, 0.0, 0.0], [2.0, 0.0, 0.0], 30).unwrap();
        let f = UncertaintyField::from_static(&[([1.0, 0.05, 0.0], 0.15)], 0.15).unwrap();
        (t, f, PlanConfig::default())
    }

    #[test]
    fn straight_line_in_empty_field_is_fixed_point() {
        let (t, _, cfg) = scene();
        let (out, log) = optimize(&t, &UncertaintyField::empty(0.15), &cfg);
        assert_eq!(out, t);
        assert!(log.iterations.is_empty());
    }

    #[test]
    fn avoids_the_obstacle() {
        let (t, f, cfg) = scene();
        let (out, log) = optimize(&t, &f, &cfg);
        assert!(!log.iterations.is_empty());
        let mut prev = log.initial_cost;
        for r in &log.iterations {
            assert!(r.cost <= prev);
            prev = r.cost;
        }
        assert_eq!(out.waypoints[0], t.waypoints[0]);
        assert_eq!(out.waypoints[29], t.waypoints[29]);
        let before = collision_probability_profile(&t, &f).max;
        let after = collision_probability_profile(&out, &f).max;
        assert!(after < before, "{after} vs {before}");
    }
}
