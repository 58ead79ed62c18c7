use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Bernoulli masks for one stochastic forward pass, reused at every time step.
///
/// Entries are `0` for dropped units and `1/(1−p)` for kept ones.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMaskSet<T = f64> {
    /// One entry per joint; shared by the joint's 9 feature channels.
    pub input_joint: Vec<T>,
    pub hidden_enc: Vec<T>,
    pub hidden_dec: Vec<T>,
}

impl<T: Scalar> DropoutMaskSet<T> {
    pub fn all_keep(n_joints: usize, hidden: usize) -> Self {
        Self {
            input_joint: vec![T::one(); n_joints],
            hidden_enc: vec![T::one(); hidden],
            hidden_dec: vec![T::one(); hidden],
        }
    }

    /// Draws masks from `seed`. Order: input joints, encoder hidden, decoder hidden.
    pub fn sample(n_joints: usize, hidden: usize, rate: T, seed: u64) -> Self {
        let p = rate.as_f64();
        if p <= 0.0 {
            return Self::all_keep(n_joints, hidden);
        }
        let keep = T::one() / (T::one() - rate);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<T> {
            (0..n).map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep }).collect()
        };
        let input_joint = draw(n_joints);
        let hidden_enc = draw(hidden);
        let hidden_dec = draw(hidden);
        Self { input_joint, hidden_enc, hidden_dec }
    }

    /// Expands the joint mask over the `[x, v, a]` layout (9J channels).
    pub fn input_channels(&self) -> Vec<T> {
        let j = self.input_joint.len();
        let mut out = vec![T::zero(); 9 * j];
        for block in 0..3 {
            for (k, m) in self.input_joint.iter().enumerate() {
                for c in 0..3 {
                    out[block * 3 * j + 3 * k + c] = *m;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_scaled() {
        let a = DropoutMaskSet::<f64>::sample(17, 64, 0.5, 9);
        assert_eq!(a, DropoutMaskSet::sample(17, 64, 0.5, 9));
        assert!(a.hidden_enc.iter().all(|m| *m == 0.0 || *m == 2.0));
        assert!(a.hidden_enc.iter().any(|m| *m == 0.0));
        assert_eq!(DropoutMaskSet::<f64>::sample(3, 4, 0.0, 1), DropoutMaskSet::all_keep(3, 4));
    }

    #[test]
    fn joint_mask_covers_all_channels() {
        let mut m = DropoutMaskSet::<f64>::all_keep(2, 1);
        m.input_joint[1] = 0.0;
        let ch = m.input_channels();
        for block in 0..3 {
            assert_eq!(&ch[block * 6..block * 6 + 3], &[1.0; 3]);
            assert_eq!(&ch[block * 6 + 3..block * 6 + 6], &[0.0; 3]);
        }
    }
}
