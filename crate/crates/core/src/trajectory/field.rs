use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::scalar::{norm3, sub3, Scalar, Vec3};
use crate::trajectory::cost::Trajectory;
use crate::uncertainty::SelectionResult;

/// Per-step σ̂ inflation past the trustworthy length.
pub const DEFAULT_GROWTH: f64 = 1.05;

const CENTER_RATIO: f64 = 1e-4;

/// Isotropic Gaussians for one planning step.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSet<T = f64> {
    pub means: Vec<Vec3<T>>,
    pub sigmas: Vec<T>,
}

/// Time-indexed Gaussian occupancy with a capture radius.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintyField<T = f64> {
    steps: Vec<GaussianSet<T>>,
    safety_radius: T,
}

/// `P(‖X − μ‖ ≤ r)` for `X ~ N(μ, σ²I₃)` at distance `d` from `μ`.
///
/// Closed form of the noncentral chi (3 dof) CDF; the `d → 0` limit is the
/// Maxwell CDF and `σ ≤ 0` is the indicator `d < r`.
pub fn sphere_capture_probability<T: Scalar>(d: T, sigma: T, r: T) -> T {
    let (d, s, r) = (d.as_f64().abs(), sigma.as_f64(), r.as_f64());
    if r <= 0.0 {
        return T::zero();
    }
    if !(s > 0.0) {
        return if d < r { T::one() } else { T::zero() };
    }
    let p = if d / s < CENTER_RATIO {
        let x = r / s;
        libm::erf(x / std::f64::consts::SQRT_2) - (2.0 / std::f64::consts::PI).sqrt() * x * (-0.5 * x * x).exp()
    } else {
        let a = (r - d) / s;
        let b = (r + d) / s;
        // Φ(a) + Φ(b) − 1 = Φ(a) − Φ(−b)
        let cdf = |x: f64| 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
        let tail = s / (d * (2.0 * std::f64::consts::PI).sqrt()) * ((-0.5 * a * a).exp() - (-0.5 * b * b).exp());
        cdf(a) - cdf(-b) - tail
    };
    T::lit(p.clamp(0.0, 1.0))
}

impl<T: Scalar> UncertaintyField<T> {
    pub fn new(steps: Vec<GaussianSet<T>>, safety_radius: T) -> Result<Self> {
        if !(safety_radius >= T::zero()) {
            return Err(invalid("safety radius must be non-negative"));
        }
        for s in &steps {
            if s.means.len() != s.sigmas.len() {
                return Err(invalid("every Gaussian needs one mean and one sigma"));
            }
            if s.sigmas.iter().any(|v| !(*v > T::zero() && v.is_finite())) {
                return Err(invalid("field sigmas must be positive and finite"));
            }
            if s.means.iter().flatten().any(|v| !v.is_finite()) {
                return Err(invalid("field means must be finite"));
            }
        }
        Ok(Self { steps, safety_radius })
    }

    /// A field with no Gaussians; its value is 0 everywhere.
    pub fn empty(safety_radius: T) -> Self {
        Self { steps: Vec::new(), safety_radius }
    }

    /// The same Gaussians at every step.
    pub fn from_static(gaussians: &[(Vec3<T>, T)], safety_radius: T) -> Result<Self> {
        let set = GaussianSet { means: gaussians.iter().map(|g| g.0).collect(), sigmas: gaussians.iter().map(|g| g.1).collect() };
        Self::new(vec![set], safety_radius)
    }

    /// One step per predicted frame up to `horizon`; frames past the
    /// trustworthy prefix reuse its last frame with σ̂ grown by `growth` per step.
    pub fn from_selection(selection: &SelectionResult<T>, horizon: usize, growth: T, safety_radius: T) -> Result<Self> {
        if selection.trustworthy_length == 0 || selection.mean_frames.is_empty() {
            return Err(invalid("selected prediction has no trustworthy frames"));
        }
        if !(growth >= T::one()) {
            return Err(invalid("growth factor must be at least 1"));
        }
        let to_set = |t: usize, inflate: T| {
            let pose = &selection.mean_frames[t];
            GaussianSet {
                means: (0..pose.n_joints()).map(|j| pose.joint(j)).collect(),
                sigmas: selection.sigma[t].iter().map(|s| *s * inflate).collect(),
            }
        };
        let len = selection.mean_frames.len();
        let steps = (0..horizon.max(len))
            .map(|t| if t < len { to_set(t, T::one()) } else { to_set(len - 1, growth.powi((t + 1 - len) as i32)) })
            .collect();
        Self::new(steps, safety_radius)
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn safety_radius(&self) -> T {
        self.safety_radius
    }

    pub fn steps(&self) -> &[GaussianSet<T>] {
        &self.steps
    }
}

/// Max over Gaussians of the capture probability at step `t` (clamped to the last step).
pub fn field_value<T: Scalar>(field: &UncertaintyField<T>, point: &Vec3<T>, t: usize) -> T {
    let Some(set) = field.steps.get(t.min(field.steps.len().saturating_sub(1))) else {
        return T::zero();
    };
    set.means
        .iter()
        .zip(&set.sigmas)
        .map(|(m, s)| sphere_capture_probability(norm3(&sub3(point, m)), *s, field.safety_radius))
        .fold(T::zero(), T::max)
}

/// Field value at fractional step `tau`, linearly blending neighbouring steps.
pub fn field_value_interp<T: Scalar>(field: &UncertaintyField<T>, point: &Vec3<T>, tau: T) -> T {
    let last = field.n_steps().saturating_sub(1);
    let tau = tau.max(T::zero()).min(T::from_usize_lossy(last));
    let lo = tau.floor().to_usize().unwrap_or(0).min(last);
    let frac = tau - T::from_usize_lossy(lo);
    let a = field_value(field, point, lo);
    if frac == T::zero() || lo == last {
        return a;
    }
    let b = field_value(field, point, lo + 1);
    a + (b - a) * frac
}

/// Field step aligned with waypoint `k` of `n` (linear resampling).
pub(crate) fn field_time<T: Scalar>(field: &UncertaintyField<T>, k: usize, n: usize) -> T {
    if n < 2 || field.n_steps() < 2 {
        return T::zero();
    }
    T::from_usize_lossy(k) * T::from_usize_lossy(field.n_steps() - 1) / T::from_usize_lossy(n - 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityProfile<T = f64> {
    pub values: Vec<T>,
    pub max: T,
}

/// Field value at every waypoint/time pair.
pub fn collision_probability_profile<T: Scalar>(traj: &Trajectory<T>, field: &UncertaintyField<T>) -> ProbabilityProfile<T> {
    let n = traj.waypoints.len();
    let values: Vec<T> = traj
        .waypoints
        .par_iter()
        .enumerate()
        .map(|(k, p)| field_value_interp(field, p, field_time(field, k, n)))
        .collect();
    let max = values.iter().copied().fold(T::zero(), T::max);
    ProbabilityProfile { values, max }
}
