use crate::data::pose::{MotionSequence, Pose};
use crate::error::{invalid, shape, Result};
use crate::scalar::Scalar;

/// Per-coordinate standardization fit on training data.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationStats<T = f64> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> NormalizationStats<T> {
    pub fn identity(n_coords: usize) -> Self {
        Self { mean: vec![T::zero(); n_coords], scale: vec![T::one(); n_coords] }
    }

    pub fn n_coords(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.mean.len() != n || self.scale.len() != n {
            return Err(shape(format!(
                "normalization has {} coordinates, sequence has {n}",
                self.mean.len()
            )));
        }
        Ok(())
    }

    pub fn normalize_pose(&self, pose: &Pose<T>) -> Result<Pose<T>> {
        self.check(pose.coords().len())?;
        let c = pose
            .coords()
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (*x - *m) / *s)
            .collect();
        Pose::from_coords(c)
    }

    pub fn denormalize_pose(&self, pose: &Pose<T>) -> Result<Pose<T>> {
        self.check(pose.coords().len())?;
        let c = pose
            .coords()
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| *x * *s + *m)
            .collect();
        Pose::from_coords(c)
    }

    pub fn normalize(&self, seq: &MotionSequence<T>) -> Result<MotionSequence<T>> {
        self.map_seq(seq, Self::normalize_pose)
    }

    pub fn denormalize(&self, seq: &MotionSequence<T>) -> Result<MotionSequence<T>> {
        self.map_seq(seq, Self::denormalize_pose)
    }

    fn map_seq(
        &self,
        seq: &MotionSequence<T>,
        f: fn(&Self, &Pose<T>) -> Result<Pose<T>>,
    ) -> Result<MotionSequence<T>> {
        let frames = seq.frames.iter().map(|p| f(self, p)).collect::<Result<Vec<_>>>()?;
        Ok(MotionSequence { frames, frame_rate_hz: seq.frame_rate_hz, label: seq.label.clone() })
    }

    /// Isotropic length scale of joint `j`: RMS of its three coordinate scales.
    /// Converts a model-space per-joint standard deviation to meters.
    pub fn joint_scale(&self, j: usize) -> T {
        let s = &self.scale[3 * j..3 * j + 3];
        ((s[0] * s[0] + s[1] * s[1] + s[2] * s[2]) / T::lit(3.0)).sqrt()
    }
}

/// Fits per-coordinate mean and population standard deviation over every frame.
/// Zero deviations are replaced by 1.
pub fn fit_normalization<T: Scalar>(train: &[MotionSequence<T>]) -> Result<NormalizationStats<T>> {
    let n_coords = train
        .iter()
        .find(|s| !s.is_empty())
        .map(|s| 3 * s.n_joints())
        .ok_or_else(|| invalid("normalization needs at least one frame"))?;
    let mut count = 0usize;
    let mut mean = vec![T::zero(); n_coords];
    for f in train.iter().flat_map(|s| &s.frames) {
        if f.coords().len() != n_coords {
            return Err(shape("sequences disagree on joint count"));
        }
        count += 1;
        for (m, x) in mean.iter_mut().zip(f.coords()) {
            *m += *x;
        }
    }
    let n = T::from_usize_lossy(count);
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![T::zero(); n_coords];
    for f in train.iter().flat_map(|s| &s.frames) {
        for ((v, x), m) in var.iter_mut().zip(f.coords()).zip(&mean) {
            let d = *x - *m;
            *v += d * d;
        }
    }
    let scale = var
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > T::zero() {
                s
            } else {
                T::one()
            }
        })
        .collect();
    Ok(NormalizationStats { mean, scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(rows: &[Vec<f64>]) -> MotionSequence {
        MotionSequence::new(rows.iter().map(|r| Pose::from_coords(r.clone()).unwrap()).collect(), 25.0, "t")
            .unwrap()
    }

    #[test]
    fn identical_frames_unit_scale() {
        let s = seq(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]);
        let st = fit_normalization(&[s]).unwrap();
        assert_eq!(st.mean, vec![1.0, 2.0, 3.0]);
        assert_eq!(st.scale, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_and_two() {
        let s = seq(&[vec![0.0, 5.0, 5.0], vec![2.0, 5.0, 5.0]]);
        let st = fit_normalization(&[s]).unwrap();
        assert_eq!(st.mean[0], 1.0);
        assert_eq!(st.scale[0], 1.0);
    }

    #[test]
    fn single_frame_and_empty() {
        let st = fit_normalization(&[seq(&[vec![4.0, 5.0, 6.0]])]).unwrap();
        assert_eq!(st.mean, vec![4.0, 5.0, 6.0]);
        assert_eq!(st.scale, vec![1.0; 3]);
        assert!(fit_normalization::<f64>(&[]).is_err());
    }

    #[test]
    fn identity_and_centering() {
        let s = seq(&[vec![0.3, -1.0, 2.0]]);
        let id = NormalizationStats::identity(3);
        assert_eq!(id.normalize(&s).unwrap(), s);
        let st = NormalizationStats { mean: vec![0.3, -1.0, 2.0], scale: vec![2.0, 3.0, 4.0] };
        assert_eq!(st.normalize(&s).unwrap().frames[0].coords(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let s = seq(&[vec![0.3, -1.0, 2.0]]);
        assert!(NormalizationStats::<f64>::identity(6).normalize(&s).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(rows in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 6), 1..20),
                      mean in proptest::collection::vec(-3.0f64..3.0, 6),
                      scale in proptest::collection::vec(0.01f64..5.0, 6)) {
            let s = seq(&rows);
            let st = NormalizationStats { mean, scale };
            let back = st.denormalize(&st.normalize(&s).unwrap()).unwrap();
            for (a, b) in back.frames.iter().zip(&s.frames) {
                for (x, y) in a.coords().iter().zip(b.coords()) {
                    prop_assert!((x - y).abs() <= 1e-9);
                }
            }
        }
    }
}
