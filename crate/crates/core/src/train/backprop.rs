//! Reverse-mode differentiation of the heteroscedastic loss through the
//! closed-loop decoder and the encoder. Dropout masks are constants.

use crate::data::WindowPair;
use crate::error::{shape, Error, Result};
use crate::model::{forward_pass, DropoutMaskSet, ModelParams, LOG_VAR_MAX, LOG_VAR_MIN};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct LossAndGrad<T> {
    pub loss: T,
    pub grads: ModelParams<T>,
}

fn check_window<T: Scalar>(params: &ModelParams<T>, window: &WindowPair<T>) -> Result<()> {
    if window.future.is_empty() {
        return Err(shape("window has an empty future"));
    }
    if window.future.n_joints() != params.n_joints {
        return Err(shape("window joint count does not match the model"));
    }
    Ok(())
}

/// Loss of one window under fixed masks, via the forward pass only.
pub fn window_loss<T: Scalar>(params: &ModelParams<T>, masks: &DropoutMaskSet<T>, window: &WindowPair<T>) -> Result<T> {
    check_window(params, window)?;
    let t_f = window.future.len();
    let tape = forward_pass(params, masks, &window.observed, t_f, false, None)?;
    let j = params.n_joints;
    let mut loss = T::zero();
    for s in 0..t_f {
        let pos = &tape.positions[s + 3];
        let truth = window.future.frames[s].coords();
        for jj in 0..j {
            let var = crate::model::forward::variance_from_log(tape.log_vars[s][jj]);
            let r2 = (0..3).map(|c| (truth[3 * jj + c] - pos[3 * jj + c]).powi(2)).fold(T::zero(), |a, b| a + b);
            loss += r2 / (T::lit(2.0) * var) + T::lit(0.5) * var.ln();
        }
    }
    Ok(loss / T::from_usize_lossy(t_f * j))
}

pub fn loss_gradients<T: Scalar>(
    params: &ModelParams<T>,
    masks: &DropoutMaskSet<T>,
    window: &WindowPair<T>,
) -> Result<LossAndGrad<T>> {
    check_window(params, window)?;
    let t_f = window.future.len();
    let j = params.n_joints;
    let nc = 3 * j;
    let tape = forward_pass(params, masks, &window.observed, t_f, true, None)?;
    let norm = T::one() / T::from_usize_lossy(t_f * j);
    let half = T::lit(0.5);
    let (lv_lo, lv_hi) = (T::lit(LOG_VAR_MIN), T::lit(LOG_VAR_MAX));

    let mut loss = T::zero();
    let mut d_pos = vec![vec![T::zero(); nc]; t_f + 3];
    let mut d_lv = vec![vec![T::zero(); j]; t_f];
    for s in 0..t_f {
        let pos = &tape.positions[s + 3];
        let truth = window.future.frames[s].coords();
        for jj in 0..j {
            let lv = tape.log_vars[s][jj];
            let var = crate::model::forward::variance_from_log(lv);
            let mut r2 = T::zero();
            for c in 0..3 {
                let r = truth[3 * jj + c] - pos[3 * jj + c];
                r2 += r * r;
                d_pos[s + 3][3 * jj + c] = -norm * r / var;
            }
            let term = r2 / (T::lit(2.0) * var) + half * var.ln();
            if !term.is_finite() {
                return Err(Error::NonFinite { step: s + 1 });
            }
            loss += norm * term;
            if lv > lv_lo && lv < lv_hi {
                d_lv[s][jj] = norm * (half - r2 / (T::lit(2.0) * var));
            }
        }
    }

    let mut grads = params.zeros_like();
    let ch = &tape.input_channels;
    let mut d_h = vec![T::zero(); params.hidden];
    let mut d_out = vec![T::zero(); 4 * j];
    let mut d_head_in = vec![T::zero(); params.hidden];
    for s in (0..t_f).rev() {
        let k = s + 3;
        // x̂_k = x̂_{k-1} + v̂: velocity gradient is the full position gradient
        d_out[..nc].copy_from_slice(&d_pos[k]);
        d_out[nc..].copy_from_slice(&d_lv[s]);
        let (before, after) = d_pos.split_at_mut(k);
        for (a, b) in before[k - 1].iter_mut().zip(&after[0]) {
            *a += *b;
        }
        grads.head_w.outer_acc(&d_out, &tape.head_inputs[s]);
        for (g, d) in grads.head_b.data.iter_mut().zip(&d_out) {
            *g += *d;
        }
        d_head_in.iter_mut().for_each(|x| *x = T::zero());
        params.head_w.matvec_t_acc(&d_out, &mut d_head_in);
        for i in 0..params.hidden {
            d_h[i] += d_head_in[i] * masks.hidden_dec[i];
        }
        let (d_in, d_prev) = params.decoder.backward(&tape.dec_steps[s], Some(&masks.hidden_dec), &d_h, &mut grads.decoder);
        d_h = d_prev;
        // feature [x, v, a] of step s was built from positions k-3, k-2, k-1
        for i in 0..nc {
            let gx = d_in[i] * ch[i];
            let gv = d_in[nc + i] * ch[nc + i];
            let ga = d_in[2 * nc + i] * ch[2 * nc + i];
            d_pos[k - 1][i] += gx + gv + ga;
            d_pos[k - 2][i] += -gv - T::lit(2.0) * ga;
            d_pos[k - 3][i] += ga;
        }
    }
    for cache in tape.enc_steps.iter().rev() {
        let (_, d_prev) = params.encoder.backward(cache, Some(&masks.hidden_enc), &d_h, &mut grads.encoder);
        d_h = d_prev;
    }
    Ok(LossAndGrad { loss, grads })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MotionSequence, Pose};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn window(j: usize, t_p: usize, t_f: usize, seed: u64) -> WindowPair<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seq = |n: usize| {
            let frames = (0..n)
                .map(|_| Pose::from_coords((0..3 * j).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap())
                .collect();
            MotionSequence::new(frames, 25.0, "r").unwrap()
        };
        let observed = seq(t_p);
        let future = seq(t_f);
        WindowPair { observed, future, offset: 0 }
    }

    #[test]
    fn loss_matches_forward_only_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ModelParams::<f64>::random(2, 4, 0.5, &mut rng).unwrap();
        let m = DropoutMaskSet::sample(2, 4, 0.5, 3);
        let w = window(2, 5, 3, 2);
        let a = loss_gradients(&p, &m, &w).unwrap().loss;
        let b = window_loss(&p, &m, &w).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn deterministic_without_dropout() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ModelParams::<f64>::random(2, 4, 0.0, &mut rng).unwrap();
        let m = DropoutMaskSet::all_keep(2, 4);
        let w = window(2, 5, 3, 2);
        let a = loss_gradients(&p, &m, &w).unwrap().grads;
        let b = loss_gradients(&p, &m, &w).unwrap().grads;
        assert_eq!(a, b);
    }

    #[test]
    fn dead_path_has_exactly_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ModelParams::<f64>::random(2, 4, 0.5, &mut rng).unwrap();
        let mut m = DropoutMaskSet::all_keep(2, 4);
        m.hidden_dec[2] = 0.0;
        let w = window(2, 5, 3, 2);
        let g = loss_gradients(&p, &m, &w).unwrap().grads;
        for r in 0..g.head_w.rows {
            assert_eq!(g.head_w.get(r, 2), 0.0);
        }
    }
}
