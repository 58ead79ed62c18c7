use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{NormalizationStats, WindowPair};
use crate::error::{invalid, Error, Result};
use crate::eval::mpjpe;
use crate::model::{predict_with_masks, Checkpoint, DropoutMaskSet, ModelParams};
use crate::scalar::Scalar;
use crate::train::adam::{adam_step, OptimizerState};
use crate::train::backprop::{loss_gradients, window_loss};
use crate::train::config::{SeedPolicy, TrainConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// `None` when the horizon is shorter than 400 ms.
    pub val_mpjpe_400ms: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T = f64> {
    /// Parameters with the best validation loss.
    pub checkpoint: Checkpoint<T>,
    pub best_epoch: usize,
    pub initial_val_loss: f64,
    pub curve: Vec<EpochRecord>,
}

impl<T> TrainOutcome<T> {
    /// `epoch,train_loss,val_loss,val_mpjpe_400ms`
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss,val_mpjpe_400ms\n");
        for r in &self.curve {
            let m = r.val_mpjpe_400ms.map_or("-".to_string(), |v| format!("{v}"));
            s.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, r.val_loss, m));
        }
        s
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
pub fn clip_global_norm<T: Scalar>(grads: &mut ModelParams<T>, max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let n = grads.global_norm();
    let cap = T::lit(max_norm);
    if n > cap {
        grads.scale(cap / n);
    }
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over a combined word
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn val_mask_seed(rng_seed: u64, idx: usize) -> u64 {
    mix(rng_seed ^ 0x0A11_DA7E, idx as u64)
}

struct Evaluated {
    loss: f64,
    mpjpe_400: Option<f64>,
}

fn evaluate_set<T: Scalar>(
    params: &ModelParams<T>,
    windows: &[WindowPair<T>],
    stats: &NormalizationStats<T>,
    rng_seed: u64,
    milestone_frames: usize,
) -> Result<Evaluated> {
    let per = windows
        .par_iter()
        .enumerate()
        .map(|(i, w)| -> Result<(f64, Option<f64>)> {
            let masks = DropoutMaskSet::sample(params.n_joints, params.hidden, params.dropout_rate, val_mask_seed(rng_seed, i));
            let loss = window_loss(params, &masks, w)?.as_f64();
            let m = if milestone_frames >= 1 && milestone_frames <= w.future.len() {
                let keep = DropoutMaskSet::all_keep(params.n_joints, params.hidden);
                let pred = predict_with_masks(params, &keep, &w.observed, milestone_frames, 0)?;
                let pred_m: Vec<_> = pred.mean_frames.iter().map(|p| stats.denormalize_pose(p)).collect::<Result<_>>()?;
                let truth_m: Vec<_> = w.future.frames[..milestone_frames]
                    .iter()
                    .map(|p| stats.denormalize_pose(p))
                    .collect::<Result<_>>()?;
                Some(mpjpe(&pred_m, &truth_m, milestone_frames)?.as_f64())
            } else {
                None
            };
            Ok((loss, m))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per.len().max(1) as f64;
    let loss = per.iter().map(|p| p.0).sum::<f64>() / n;
    let mpjpe_400 = if per.iter().all(|p| p.1.is_some()) && !per.is_empty() {
        Some(per.iter().map(|p| p.1.unwrap()).sum::<f64>() / n)
    } else {
        None
    };
    Ok(Evaluated { loss, mpjpe_400 })
}

/// Mini-batch training with MC-dropout masks; keeps the best-validation parameters.
///
/// Windows are given in meters and normalized with `stats` internally.
pub fn train<T: Scalar>(
    config: &TrainConfig,
    stats: &NormalizationStats<T>,
    train_set: &[WindowPair<T>],
    val_set: &[WindowPair<T>],
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    let first = train_set.first().ok_or_else(|| invalid("training set is empty"))?;
    let n_joints = first.observed.n_joints();
    let frame_rate = first.observed.frame_rate_hz;
    let t_f = first.future.len();
    let t_p = first.observed.len();
    let norm = |ws: &[WindowPair<T>]| -> Result<Vec<WindowPair<T>>> {
        ws.iter()
            .map(|w| {
                Ok(WindowPair { observed: stats.normalize(&w.observed)?, future: stats.normalize(&w.future)?, offset: w.offset })
            })
            .collect()
    };
    let mut train_n = norm(train_set)?;
    if config.max_windows > 0 && train_n.len() > config.max_windows {
        train_n.truncate(config.max_windows);
    }
    let val_n = norm(val_set)?;
    // validation falls back to the training set when none is given
    let monitor: &[WindowPair<T>] = if val_n.is_empty() { &train_n } else { &val_n };
    let milestone_frames = (0.4 * frame_rate.as_f64()).round() as usize;

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut params = ModelParams::random(n_joints, config.hidden_size, T::lit(config.dropout_rate), &mut init_rng)?;
    let mut state = OptimizerState::new(&params);
    let lr = T::lit(config.learning_rate);
    let wd = T::lit(config.weight_decay);

    let initial = evaluate_set(&params, monitor, stats, config.rng_seed, milestone_frames)?;
    let mut best = (initial.loss, 0usize, params.clone());
    let mut curve = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..train_n.len()).collect();
    let mut global_step = 0u64;

    for epoch in 1..=config.epochs {
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix(config.rng_seed, epoch as u64));
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (step, batch) in order.chunks(config.batch_size).enumerate() {
            global_step += 1;
            let batch_seed = mix(config.rng_seed ^ 0x7EA1_5EED, global_step);
            let results = batch
                .par_iter()
                .enumerate()
                .map(|(k, &idx)| {
                    let seed = match config.mc_train_seed_policy {
                        SeedPolicy::PerSample => mix(batch_seed, k as u64 + 1),
                        SeedPolicy::PerBatch => batch_seed,
                    };
                    let masks = DropoutMaskSet::sample(n_joints, config.hidden_size, params.dropout_rate, seed);
                    loss_gradients(&params, &masks, &train_n[idx])
                })
                .collect::<Vec<_>>();
            let mut total = params.zeros_like();
            let mut batch_loss = T::zero();
            for r in results {
                let r = r.map_err(|_| Error::Diverged { epoch, step: step + 1 })?;
                batch_loss += r.loss;
                total.add_assign(&r.grads);
            }
            let inv = T::one() / T::from_usize_lossy(batch.len());
            total.scale(inv);
            batch_loss *= inv;
            if !batch_loss.is_finite() || !total.is_finite() {
                return Err(Error::Diverged { epoch, step: step + 1 });
            }
            clip_global_norm(&mut total, config.grad_clip);
            adam_step(&mut params, &mut state, &total, lr, wd)?;
            if !params.is_finite() {
                return Err(Error::Diverged { epoch, step: step + 1 });
            }
            epoch_loss += batch_loss.as_f64() * batch.len() as f64;
        }
        let val = evaluate_set(&params, monitor, stats, config.rng_seed, milestone_frames)?;
        if !val.loss.is_finite() {
            return Err(Error::Diverged { epoch, step: 0 });
        }
        if val.loss < best.0 {
            best = (val.loss, epoch, params.clone());
        }
        curve.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / train_n.len() as f64,
            val_loss: val.loss,
            val_mpjpe_400ms: val.mpjpe_400,
        });
    }
    let checkpoint = Checkpoint { params: best.2, stats: stats.clone(), frame_rate_hz: frame_rate, t_p, t_f };
    Ok(TrainOutcome { checkpoint, best_epoch: best.1, initial_val_loss: initial.loss, curve })
}
