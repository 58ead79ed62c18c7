use crate::error::{shape, Result};
use crate::model::ModelParams;
use crate::scalar::Scalar;

/// First/second moment buffers shaped like the model.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T = f64> {
    pub m: ModelParams<T>,
    pub v: ModelParams<T>,
    pub step: u64,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(params: &ModelParams<T>) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
        }
    }
}

/// Bias-corrected Adam update `θ ← θ − lr·m̂/(√v̂ + ε)`, then decoupled decay `θ ← θ·(1 − lr·wd)`.
pub fn adam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    state: &mut OptimizerState<T>,
    grads: &ModelParams<T>,
    learning_rate: T,
    weight_decay: T,
) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) || !params.same_shape(&state.v) {
        return Err(shape("optimizer state, gradients and parameters differ in shape"));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    let decay = T::one() - learning_rate * weight_decay;
    let ps = params.tensors_mut();
    let gs = grads.tensors();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((p, g), m), v) in ps.into_iter().zip(gs).zip(ms).zip(vs) {
        for i in 0..p.1.data.len() {
            let gi = g.1.data[i];
            let mi = b1 * m.1.data[i] + (T::one() - b1) * gi;
            let vi = b2 * v.1.data[i] + (T::one() - b2) * gi * gi;
            m.1.data[i] = mi;
            v.1.data[i] = vi;
            let update = learning_rate * (mi / c1) / ((vi / c2).sqrt() + eps);
            p.1.data[i] = (p.1.data[i] - update) * decay;
        }
    }
    Ok(())
}
