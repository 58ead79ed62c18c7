//! Encoder, closed-loop residual decoder and MC-dropout sampling.

use rayon::prelude::*;

use crate::data::{MotionSequence, Pose};
use crate::error::{invalid, shape, Error, Result};
use crate::model::dropout::DropoutMaskSet;
use crate::model::features::{dynamics_into, DynamicsFeature};
use crate::model::gru::GruStepCache;
use crate::model::params::ModelParams;
use crate::scalar::Scalar;

/// Log-variance clamp: σ² is kept within `[1e-8, 1e8]`.
pub const LOG_VAR_MIN: f64 = -18.420_680_743_952_367;
pub const LOG_VAR_MAX: f64 = 18.420_680_743_952_367;

#[inline]
pub(crate) fn variance_from_log<T: Scalar>(log_var: T) -> T {
    log_var.max(T::lit(LOG_VAR_MIN)).min(T::lit(LOG_VAR_MAX)).exp()
}

/// Mean poses and per-joint standard deviations from one dropout draw.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilisticPrediction<T = f64> {
    pub mean_frames: Vec<Pose<T>>,
    /// `T_f × J`, strictly positive.
    pub sigma: Vec<Vec<T>>,
    pub mask_seed: u64,
}

impl<T: Scalar> ProbabilisticPrediction<T> {
    pub fn horizon(&self) -> usize {
        self.mean_frames.len()
    }

    pub fn n_joints(&self) -> usize {
        self.mean_frames.first().map_or(0, Pose::n_joints)
    }

    /// Keeps the first `len` frames.
    pub fn truncated(&self, len: usize) -> Self {
        Self {
            mean_frames: self.mean_frames[..len].to_vec(),
            sigma: self.sigma[..len].to_vec(),
            mask_seed: self.mask_seed,
        }
    }
}

/// N predictions of the same observed window, ordered by mask seed.
#[derive(Clone, Debug, PartialEq)]
pub struct McEnsemble<T = f64> {
    pub members: Vec<ProbabilisticPrediction<T>>,
}

impl<T: Scalar> McEnsemble<T> {
    /// Requires at least one member and a shared horizon/joint count.
    pub fn new(members: Vec<ProbabilisticPrediction<T>>) -> Result<Self> {
        let first = members.first().ok_or_else(|| invalid("ensemble has no members"))?;
        let (h, j) = (first.horizon(), first.n_joints());
        for m in &members {
            if m.horizon() != h || m.n_joints() != j || m.sigma.len() != h {
                return Err(shape("ensemble members disagree on horizon or joint count"));
            }
        }
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.members[0].horizon()
    }

    pub fn n_joints(&self) -> usize {
        self.members[0].n_joints()
    }

    /// Elementwise mean of the member mean poses.
    pub fn mean_prediction(&self) -> Vec<Pose<T>> {
        let n = T::from_usize_lossy(self.len());
        (0..self.horizon())
            .map(|t| {
                let mut acc = vec![T::zero(); 3 * self.n_joints()];
                for m in &self.members {
                    for (a, x) in acc.iter_mut().zip(m.mean_frames[t].coords()) {
                        *a += *x;
                    }
                }
                acc.iter_mut().for_each(|a| *a /= n);
                Pose::from_coords(acc).expect("non-empty pose")
            })
            .collect()
    }
}

/// Output of one decoder step.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutput<T> {
    pub velocity: Vec<T>,
    pub log_var: Vec<T>,
    pub sigma: Vec<T>,
    pub hidden: Vec<T>,
}

/// Masks actually applied at one recurrent step, plus the emitted velocity for decoder steps.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace<T> {
    pub decoder: bool,
    pub input_mask: Vec<T>,
    pub hidden_mask: Vec<T>,
    pub velocity: Option<Vec<T>>,
}

/// Intermediate values of a full forward pass; the backward pass replays them.
#[derive(Clone, Debug, Default)]
pub struct ForwardTape<T> {
    pub input_channels: Vec<T>,
    pub enc_steps: Vec<GruStepCache<T>>,
    pub dec_steps: Vec<GruStepCache<T>>,
    /// Decoder hidden state after the hidden mask, as fed to the output head.
    pub head_inputs: Vec<Vec<T>>,
    pub velocities: Vec<Vec<T>>,
    pub log_vars: Vec<Vec<T>>,
    /// Three seed frames (last observed) followed by the `T_f` predicted frames.
    pub positions: Vec<Vec<T>>,
}

fn check_input<T: Scalar>(params: &ModelParams<T>, masks: &DropoutMaskSet<T>, observed: &MotionSequence<T>) -> Result<()> {
    if observed.len() < 3 {
        return Err(invalid(format!("encoder needs at least 3 observed frames, got {}", observed.len())));
    }
    if observed.n_joints() != params.n_joints {
        return Err(shape(format!(
            "observed sequence has {} joints, model expects {}",
            observed.n_joints(),
            params.n_joints
        )));
    }
    if masks.input_joint.len() != params.n_joints
        || masks.hidden_enc.len() != params.hidden
        || masks.hidden_dec.len() != params.hidden
    {
        return Err(shape("dropout masks do not match model dimensions"));
    }
    Ok(())
}

fn apply_mask<T: Scalar>(v: &mut [T], m: &[T]) {
    for (x, k) in v.iter_mut().zip(m) {
        *x *= *k;
    }
}

/// Runs encoder then `t_f` closed-loop decoder steps.
pub fn forward_pass<T: Scalar>(
    params: &ModelParams<T>,
    masks: &DropoutMaskSet<T>,
    observed: &MotionSequence<T>,
    t_f: usize,
    record: bool,
    mut trace: Option<&mut Vec<StepTrace<T>>>,
) -> Result<ForwardTape<T>> {
    check_input(params, masks, observed)?;
    let nc = 3 * params.n_joints;
    let channels = masks.input_channels();
    let mut tape = ForwardTape { input_channels: channels.clone(), ..Default::default() };
    let mut feat = vec![T::zero(); 3 * nc];

    let mut h = vec![T::zero(); params.hidden];
    for t in 2..observed.len() {
        let f = &observed.frames;
        dynamics_into(f[t - 2].coords(), f[t - 1].coords(), f[t].coords(), &mut feat);
        apply_mask(&mut feat, &channels);
        let (next, cache) = params.encoder.step(&h, Some(&masks.hidden_enc), &feat, record);
        h = next;
        if let Some(c) = cache {
            tape.enc_steps.push(c);
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(StepTrace {
                decoder: false,
                input_mask: masks.input_joint.clone(),
                hidden_mask: masks.hidden_enc.clone(),
                velocity: None,
            });
        }
    }

    let n_obs = observed.len();
    let mut positions: Vec<Vec<T>> =
        observed.frames[n_obs - 3..].iter().map(|p| p.coords().to_vec()).collect();
    positions.reserve(t_f);
    for step in 0..t_f {
        let k = positions.len();
        dynamics_into(&positions[k - 3], &positions[k - 2], &positions[k - 1], &mut feat);
        apply_mask(&mut feat, &channels);
        let (next, cache) = params.decoder.step(&h, Some(&masks.hidden_dec), &feat, record);
        h = next;
        let mut head_in = h.clone();
        apply_mask(&mut head_in, &masks.hidden_dec);
        let mut out = params.head_b.data.clone();
        params.head_w.matvec_acc(&head_in, &mut out);
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step: step + 1 });
        }
        let log_var = out.split_off(nc);
        let velocity = out;
        let pos: Vec<T> = positions[k - 1].iter().zip(&velocity).map(|(p, v)| *p + *v).collect();
        positions.push(pos);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(StepTrace {
                decoder: true,
                input_mask: masks.input_joint.clone(),
                hidden_mask: masks.hidden_dec.clone(),
                velocity: Some(velocity.clone()),
            });
        }
        if let Some(c) = cache {
            tape.dec_steps.push(c);
        }
        tape.head_inputs.push(head_in);
        tape.velocities.push(velocity);
        tape.log_vars.push(log_var);
    }
    tape.positions = positions;
    Ok(tape)
}

/// Final encoder hidden state.
pub fn encode<T: Scalar>(
    params: &ModelParams<T>,
    masks: &DropoutMaskSet<T>,
    observed: &MotionSequence<T>,
) -> Result<Vec<T>> {
    check_input(params, masks, observed)?;
    let nc = 3 * params.n_joints;
    let channels = masks.input_channels();
    let mut feat = vec![T::zero(); 3 * nc];
    let mut h = vec![T::zero(); params.hidden];
    for t in 2..observed.len() {
        let f = &observed.frames;
        dynamics_into(f[t - 2].coords(), f[t - 1].coords(), f[t].coords(), &mut feat);
        apply_mask(&mut feat, &channels);
        h = params.encoder.step(&h, Some(&masks.hidden_enc), &feat, false).0;
    }
    Ok(h)
}

/// One decoder step on the (masked) previous dynamics feature.
pub fn decode_step<T: Scalar>(
    params: &ModelParams<T>,
    masks: &DropoutMaskSet<T>,
    h: &[T],
    prev: &DynamicsFeature<T>,
) -> Result<DecodeOutput<T>> {
    let nc = 3 * params.n_joints;
    let mut feat = prev.to_vec();
    if feat.len() != 3 * nc || h.len() != params.hidden {
        return Err(shape("decode step inputs do not match model dimensions"));
    }
    apply_mask(&mut feat, &masks.input_channels());
    let hidden = params.decoder.step(h, Some(&masks.hidden_dec), &feat, false).0;
    let mut head_in = hidden.clone();
    apply_mask(&mut head_in, &masks.hidden_dec);
    let mut out = params.head_b.data.clone();
    params.head_w.matvec_acc(&head_in, &mut out);
    let log_var = out.split_off(nc);
    let sigma = log_var.iter().map(|lv| variance_from_log(*lv).sqrt()).collect();
    Ok(DecodeOutput { velocity: out, log_var, sigma, hidden })
}

fn tape_to_prediction<T: Scalar>(tape: ForwardTape<T>, mask_seed: u64) -> ProbabilisticPrediction<T> {
    let mean_frames = tape
        .positions
        .into_iter()
        .skip(3)
        .map(|c| Pose::from_coords(c).expect("non-empty pose"))
        .collect();
    let sigma = tape
        .log_vars
        .iter()
        .map(|lv| lv.iter().map(|x| variance_from_log(*x).sqrt()).collect())
        .collect();
    ProbabilisticPrediction { mean_frames, sigma, mask_seed }
}

pub fn predict_with_masks<T: Scalar>(
    params: &ModelParams<T>,
    masks: &DropoutMaskSet<T>,
    observed: &MotionSequence<T>,
    t_f: usize,
    mask_seed: u64,
) -> Result<ProbabilisticPrediction<T>> {
    if t_f == 0 {
        return Err(invalid("prediction horizon must be at least 1 frame"));
    }
    let tape = forward_pass(params, masks, observed, t_f, false, None)?;
    Ok(tape_to_prediction(tape, mask_seed))
}

/// One stochastic forward pass with masks drawn from `mask_seed`.
pub fn predict_once<T: Scalar>(
    params: &ModelParams<T>,
    mask_seed: u64,
    observed: &MotionSequence<T>,
    t_f: usize,
) -> Result<ProbabilisticPrediction<T>> {
    let masks = DropoutMaskSet::sample(params.n_joints, params.hidden, params.dropout_rate, mask_seed);
    predict_with_masks(params, &masks, observed, t_f, mask_seed)
}

/// Like [`predict_once`] but also returns the per-step mask/velocity trace.
pub fn predict_traced<T: Scalar>(
    params: &ModelParams<T>,
    mask_seed: u64,
    observed: &MotionSequence<T>,
    t_f: usize,
) -> Result<(ProbabilisticPrediction<T>, Vec<StepTrace<T>>)> {
    let masks = DropoutMaskSet::sample(params.n_joints, params.hidden, params.dropout_rate, mask_seed);
    let mut trace = Vec::new();
    let tape = forward_pass(params, &masks, observed, t_f, false, Some(&mut trace))?;
    Ok((tape_to_prediction(tape, mask_seed), trace))
}

/// `n` predictions with mask seeds `base_seed..base_seed+n`, ordered by seed.
pub fn mc_sample<T: Scalar>(
    params: &ModelParams<T>,
    observed: &MotionSequence<T>,
    n: usize,
    t_f: usize,
    base_seed: u64,
) -> Result<McEnsemble<T>> {
    if n < 2 {
        return Err(invalid(format!("MC sampling needs at least 2 samples, got {n}")));
    }
    let members = (0..n as u64)
        .into_par_iter()
        .map(|i| predict_once(params, base_seed.wrapping_add(i), observed, t_f))
        .collect::<Result<Vec<_>>>()?;
    McEnsemble::new(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, zero_velocity_baseline, SynthFamily};
    use crate::model::features::dynamics_features;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(dropout: f64, seed: u64) -> ModelParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ModelParams::random(3, 6, dropout, &mut rng).unwrap()
    }

    fn obs(n: usize, seed: u64) -> MotionSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let frames = (0..n)
            .map(|_| Pose::from_coords((0..9).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap())
            .collect();
        MotionSequence::new(frames, 25.0, "x").unwrap()
    }

    #[test]
    fn encode_deterministic_and_boundary() {
        let p = tiny(0.0, 1);
        let m = DropoutMaskSet::all_keep(3, 6);
        let o = obs(8, 2);
        assert_eq!(encode(&p, &m, &o).unwrap(), encode(&p, &m, &o).unwrap());
        let mut trace = Vec::new();
        forward_pass(&p, &m, &obs(3, 2), 1, false, Some(&mut trace)).unwrap();
        assert_eq!(trace.iter().filter(|s| !s.decoder).count(), 1);
        assert!(encode(&p, &m, &obs(2, 2)).is_err());
    }

    #[test]
    fn dropped_joint_does_not_affect_encoding() {
        let p = tiny(0.0, 1);
        let mut m = DropoutMaskSet::all_keep(3, 6);
        m.input_joint[1] = 0.0;
        let o = obs(8, 2);
        let mut o2 = o.clone();
        for f in &mut o2.frames {
            f.coords_mut()[3..6].iter_mut().for_each(|c| *c += 7.5);
        }
        assert_eq!(encode(&p, &m, &o).unwrap(), encode(&p, &m, &o2).unwrap());
    }

    #[test]
    fn zero_head_decode() {
        let mut p = tiny(0.0, 1);
        p.zero_head();
        let m = DropoutMaskSet::all_keep(3, 6);
        let a = Pose::from_coords(vec![0.1; 9]).unwrap();
        let f = dynamics_features(&a, &a, &a).unwrap();
        let out = decode_step(&p, &m, &[0.2; 6], &f).unwrap();
        assert_eq!(out.velocity, vec![0.0; 9]);
        assert_eq!(out.log_var, vec![0.0; 3]);
        assert_eq!(out.sigma, vec![1.0; 3]);
    }

    #[test]
    fn log_var_parameterization() {
        let mut p = tiny(0.0, 1);
        p.zero_head();
        p.head_b.data[9] = 2.0 * 0.5f64.ln();
        let m = DropoutMaskSet::all_keep(3, 6);
        let a = Pose::from_coords(vec![0.0; 9]).unwrap();
        let f = dynamics_features(&a, &a, &a).unwrap();
        let out = decode_step(&p, &m, &[0.0; 6], &f).unwrap();
        assert!((out.sigma[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_head_prediction_is_zero_velocity_baseline() {
        let mut p = tiny(0.5, 4);
        p.zero_head();
        let o = obs(10, 5);
        let pred = predict_once(&p, 17, &o, 6).unwrap();
        let base = zero_velocity_baseline(&o, 6).unwrap();
        assert_eq!(pred.mean_frames, base.frames);
        assert!(pred.sigma.iter().flatten().all(|s| *s == 1.0));
    }

    #[test]
    fn same_seed_same_prediction_and_ensemble() {
        let p = tiny(0.5, 4);
        let o = obs(10, 5);
        assert_eq!(predict_once(&p, 3, &o, 5).unwrap(), predict_once(&p, 3, &o, 5).unwrap());
        assert_eq!(mc_sample(&p, &o, 2, 5, 9).unwrap(), mc_sample(&p, &o, 2, 5, 9).unwrap());
        let e = mc_sample(&p, &o, 30, 5, 0).unwrap();
        assert_eq!(e.len(), 30);
        assert_eq!(e.members[7].mask_seed, 7);
        assert!(mc_sample(&p, &o, 1, 5, 0).is_err());
    }

    #[test]
    fn zero_dropout_members_identical() {
        let p = tiny(0.0, 4);
        let o = obs(10, 5);
        let e = mc_sample(&p, &o, 5, 4, 100).unwrap();
        for m in &e.members[1..] {
            assert_eq!(m.mean_frames, e.members[0].mean_frames);
            assert_eq!(m.sigma, e.members[0].sigma);
        }
    }

    #[test]
    fn masks_constant_across_steps_and_residual_exact() {
        let p = tiny(0.5, 8);
        let o = obs(12, 1);
        for seed in 0..10 {
            let (pred, trace) = predict_traced(&p, seed, &o, 7).unwrap();
            let enc: Vec<_> = trace.iter().filter(|s| !s.decoder).collect();
            let dec: Vec<_> = trace.iter().filter(|s| s.decoder).collect();
            assert!(enc.windows(2).all(|w| w[0].input_mask == w[1].input_mask && w[0].hidden_mask == w[1].hidden_mask));
            assert!(dec.windows(2).all(|w| w[0].input_mask == w[1].input_mask && w[0].hidden_mask == w[1].hidden_mask));
            assert_eq!(enc[0].input_mask, dec[0].input_mask);
            let mut prev = o.frames.last().unwrap().coords().to_vec();
            for (t, s) in dec.iter().enumerate() {
                let v = s.velocity.as_ref().unwrap();
                let cur = pred.mean_frames[t].coords();
                for i in 0..9 {
                    assert_eq!(cur[i], prev[i] + v[i]);
                }
                prev = cur.to_vec();
            }
        }
    }

    #[test]
    fn dropped_joint_zero_vs_random_input_identical_prediction() {
        let p = tiny(0.5, 8);
        let o = obs(12, 1);
        for seed in 0..40 {
            let masks = DropoutMaskSet::sample(3, 6, 0.5, seed);
            let Some(j) = masks.input_joint.iter().position(|m| *m == 0.0) else { continue };
            // only the observed window can be perturbed; later frames are predictions
            let mut zeroed = o.clone();
            let mut noisy = o.clone();
            for (k, f) in zeroed.frames.iter_mut().enumerate() {
                f.coords_mut()[3 * j..3 * j + 3].iter_mut().for_each(|c| *c = 0.0);
                noisy.frames[k].coords_mut()[3 * j..3 * j + 3].iter_mut().for_each(|c| *c = (k as f64).sin() * 3.0);
            }
            let a = predict_with_masks(&p, &masks, &zeroed, 5, seed).unwrap();
            let b = predict_with_masks(&p, &masks, &noisy, 5, seed).unwrap();
            // other joints' trajectories do not depend on the dropped joint
            for (fa, fb) in a.mean_frames.iter().zip(&b.mean_frames) {
                for c in 0..9 {
                    if c / 3 != j {
                        assert_eq!(fa.coords()[c], fb.coords()[c]);
                    }
                }
            }
            assert_eq!(a.sigma, b.sigma);
        }
    }

    #[test]
    fn sigma_positive_on_synthetic_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = ModelParams::<f64>::random(17, 16, 0.5, &mut rng).unwrap();
        let o: MotionSequence = synth_generate(SynthFamily::B, 3, 20).unwrap();
        let pred = predict_once(&p, 5, &o, 10).unwrap();
        assert!(pred.sigma.iter().flatten().all(|s| *s > 0.0 && s.is_finite()));
        assert_eq!(pred.horizon(), 10);
    }
}
