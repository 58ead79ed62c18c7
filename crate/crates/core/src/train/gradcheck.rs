use crate::data::WindowPair;
use crate::error::{invalid, shape, Result};
use crate::model::{DropoutMaskSet, ModelParams};
use crate::scalar::Scalar;
use crate::train::backprop::{loss_gradients, window_loss};

/// Largest model the checker will perturb entry by entry.
pub const GRAD_CHECK_MAX_PARAMS: usize = 20_000;

/// Magnitude below which relative error is measured against this floor instead.
const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub worst_rel_error: f64,
    /// `tensor[index]` of the worst entry.
    pub worst_param: String,
    /// Worst relative error per named tensor.
    pub per_tensor: Vec<(String, f64)>,
}

/// Central differences for every parameter against backpropagated gradients.
pub fn grad_check<T: Scalar>(
    params: &ModelParams<T>,
    masks: &DropoutMaskSet<T>,
    window: &WindowPair<T>,
    epsilon: f64,
) -> Result<GradCheckReport> {
    guard(params, epsilon)?;
    let analytic = loss_gradients(params, masks, window)?.grads;
    grad_check_against(params, masks, window, epsilon, &analytic)
}

fn guard<T: Scalar>(params: &ModelParams<T>, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(invalid("finite-difference epsilon must be positive"));
    }
    let n = params.param_count();
    if n > GRAD_CHECK_MAX_PARAMS {
        return Err(invalid(format!(
            "model has {n} parameters, above the {GRAD_CHECK_MAX_PARAMS} gradient-check limit; use a smaller hidden size or fewer joints"
        )));
    }
    Ok(())
}

/// Compares caller-supplied gradients with central differences.
pub fn grad_check_against<T: Scalar>(
    params: &ModelParams<T>,
    masks: &DropoutMaskSet<T>,
    window: &WindowPair<T>,
    epsilon: f64,
    analytic: &ModelParams<T>,
) -> Result<GradCheckReport> {
    guard(params, epsilon)?;
    if !params.same_shape(analytic) {
        return Err(shape("analytic gradients do not match the model"));
    }
    let eps = T::lit(epsilon);
    let mut probe = params.clone();
    let mut worst = (0.0f64, String::new());
    let mut per_tensor = Vec::new();
    let names: Vec<String> = params.tensors().into_iter().map(|(n, _)| n).collect();
    for (ti, name) in names.iter().enumerate() {
        let len = params.tensors()[ti].1.len();
        let mut tensor_worst = 0.0f64;
        for i in 0..len {
            let orig = params.tensors()[ti].1.data[i];
            probe.tensors_mut()[ti].1.data[i] = orig + eps;
            let up = window_loss(&probe, masks, window)?;
            probe.tensors_mut()[ti].1.data[i] = orig - eps;
            let down = window_loss(&probe, masks, window)?;
            probe.tensors_mut()[ti].1.data[i] = orig;
            let numeric = ((up - down) / (T::lit(2.0) * eps)).as_f64();
            let a = analytic.tensors()[ti].1.data[i].as_f64();
            let denom = a.abs().max(numeric.abs()).max(REL_FLOOR);
            let rel = (a - numeric).abs() / denom;
            if rel > tensor_worst {
                tensor_worst = rel;
            }
            if rel > worst.0 || worst.1.is_empty() {
                worst = (rel, format!("{name}[{i}]"));
            }
        }
        per_tensor.push((name.clone(), tensor_worst));
    }
    Ok(GradCheckReport { worst_rel_error: worst.0, worst_param: worst.1, per_tensor })
}
