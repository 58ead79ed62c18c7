use crate::data::Pose;
use crate::error::{invalid, shape, Result};
use crate::scalar::{norm3, sub3, Scalar};

/// Mean joint distance per frame over the first `horizon` frames.
pub fn per_frame_errors<T: Scalar>(pred: &[Pose<T>], truth: &[Pose<T>], horizon: usize) -> Result<Vec<T>> {
    if horizon == 0 {
        return Err(invalid("MPJPE horizon must be at least 1 frame"));
    }
    if horizon > pred.len() || horizon > truth.len() {
        return Err(invalid(format!(
            "MPJPE horizon {horizon} exceeds sequence lengths ({} predicted, {} true)",
            pred.len(),
            truth.len()
        )));
    }
    pred[..horizon]
        .iter()
        .zip(&truth[..horizon])
        .map(|(p, t)| {
            if p.n_joints() != t.n_joints() {
                return Err(shape(format!("joint count mismatch: {} vs {}", p.n_joints(), t.n_joints())));
            }
            let j = p.n_joints();
            let s: T = (0..j).map(|k| norm3(&sub3(&p.joint(k), &t.joint(k)))).sum();
            Ok(s / T::from_usize_lossy(j))
        })
        .collect()
}

/// Mean per-joint position error over frames `1..=horizon`, meters.
pub fn mpjpe<T: Scalar>(pred: &[Pose<T>], truth: &[Pose<T>], horizon: usize) -> Result<T> {
    let f = per_frame_errors(pred, truth, horizon)?;
    Ok(f.iter().copied().sum::<T>() / T::from_usize_lossy(horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pose(v: &[f64]) -> Pose {
        Pose::from_coords(v.to_vec()).unwrap()
    }

    #[test]
    fn identity_and_translation() {
        let a = vec![pose(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]); 4];
        assert_eq!(mpjpe(&a, &a, 4).unwrap(), 0.0);
        let b: Vec<Pose> = a
            .iter()
            .map(|p| pose(&p.coords().chunks(3).flat_map(|c| [c[0] + 0.1, c[1], c[2]]).collect::<Vec<_>>()))
            .collect();
        assert_relative_eq!(mpjpe(&b, &a, 4).unwrap(), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn hand_average() {
        let p = [pose(&[0.1, 0.0, 0.0, 0.0, 0.3, 0.0])];
        let t = [pose(&[0.0; 6])];
        assert_relative_eq!(mpjpe(&p, &t, 1).unwrap(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn horizon_errors() {
        let a = vec![pose(&[0.0; 3]); 2];
        assert!(mpjpe(&a, &a, 3).is_err());
        assert!(mpjpe(&a, &a, 0).is_err());
        assert!(mpjpe(&a, &vec![pose(&[0.0; 6]); 2], 1).is_err());
    }

    proptest! {
        #[test]
        fn translation_detectable(
            coords in proptest::collection::vec(-2.0f64..2.0, 12),
            d in proptest::array::uniform3(-1.0f64..1.0),
        ) {
            let truth = vec![pose(&coords[..6]), pose(&coords[6..])];
            let moved: Vec<Pose> = truth
                .iter()
                .map(|p| pose(&p.coords().chunks(3).flat_map(|c| [c[0] + d[0], c[1] + d[1], c[2] + d[2]]).collect::<Vec<_>>()))
                .collect();
            let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            prop_assert!((mpjpe(&moved, &truth, 2).unwrap() - norm).abs() < 1e-12);
        }

        #[test]
        fn prefix_consistent(coords in proptest::collection::vec(-2.0f64..2.0, 30), h in 1usize..5) {
            let pred: Vec<Pose> = coords.chunks(6).map(pose).collect();
            let truth = vec![pose(&[0.0; 6]); 5];
            let full = per_frame_errors(&pred, &truth, 5).unwrap();
            let prefix = full[..h].iter().sum::<f64>() / h as f64;
            prop_assert!((mpjpe(&pred, &truth, h).unwrap() - prefix).abs() < 1e-12);
        }
    }
}
