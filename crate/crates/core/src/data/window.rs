use crate::data::pose::MotionSequence;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Longest prediction horizon a window may carry.
pub const MAX_HORIZON_SECONDS: f64 = 2.0;

/// Contiguous observed/future split of one source sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowPair<T = f64> {
    pub observed: MotionSequence<T>,
    pub future: MotionSequence<T>,
    /// Frame offset of the first observed frame in the source sequence.
    pub offset: usize,
}

/// Slices every `(t_p, t_f)` window starting at `0, stride, 2·stride, …` that fits in `seq`.
///
/// A sequence shorter than `t_p + t_f` yields an empty list.
pub fn window_dataset<T: Scalar>(
    seq: &MotionSequence<T>,
    t_p: usize,
    t_f: usize,
    stride: usize,
) -> Result<Vec<WindowPair<T>>> {
    if t_p < 3 {
        return Err(invalid(format!("t_p must be at least 3 frames, got {t_p}")));
    }
    if t_f < 1 {
        return Err(invalid("t_f must be at least 1 frame"));
    }
    if stride < 1 {
        return Err(invalid("stride must be at least 1 frame"));
    }
    let horizon_s = t_f as f64 / seq.frame_rate_hz.as_f64();
    if horizon_s > MAX_HORIZON_SECONDS + 1e-9 {
        return Err(invalid(format!(
            "t_f={t_f} frames spans {horizon_s:.3} s, above the {MAX_HORIZON_SECONDS} s horizon"
        )));
    }
    let span = t_p + t_f;
    if seq.len() < span {
        return Ok(Vec::new());
    }
    Ok((0..=seq.len() - span)
        .step_by(stride)
        .map(|off| WindowPair {
            observed: seq.slice(off, off + t_p),
            future: seq.slice(off + t_p, off + span),
            offset: off,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::pose::Pose;
    use proptest::prelude::*;

    fn ramp(n: usize) -> MotionSequence {
        let frames = (0..n).map(|i| Pose::from_coords(vec![i as f64, 0.0, 0.0]).unwrap()).collect();
        MotionSequence::new(frames, 25.0, "ramp").unwrap()
    }

    #[test]
    fn single_pair_when_exact_fit() {
        let w = window_dataset(&ramp(100), 50, 50, 25).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].offset, 0);
    }

    #[test]
    fn stride_eighty() {
        let w = window_dataset(&ramp(100), 10, 10, 80).unwrap();
        assert_eq!(w.iter().map(|p| p.offset).collect::<Vec<_>>(), vec![0, 80]);
        // future starts right after observed ends
        assert_eq!(w[1].observed.frames.last().unwrap().coords()[0], 89.0);
        assert_eq!(w[1].future.frames[0].coords()[0], 90.0);
    }

    #[test]
    fn too_short_is_empty() {
        assert!(window_dataset(&ramp(5), 50, 50, 1).unwrap().is_empty());
    }

    #[test]
    fn bad_arguments() {
        assert!(window_dataset(&ramp(100), 2, 10, 1).is_err());
        assert!(window_dataset(&ramp(100), 10, 0, 1).is_err());
        assert!(window_dataset(&ramp(100), 10, 10, 0).is_err());
        assert!(window_dataset(&ramp(100), 10, 51, 1).is_err());
    }

    proptest! {
        #[test]
        fn count_matches_enumeration(len in 1usize..200, t_p in 3usize..40, t_f in 1usize..50, stride in 1usize..30) {
            let w = window_dataset(&ramp(len), t_p, t_f, stride).unwrap();
            let mut brute = Vec::new();
            let mut off = 0;
            while off + t_p + t_f <= len {
                brute.push(off);
                off += stride;
            }
            prop_assert_eq!(w.iter().map(|p| p.offset).collect::<Vec<_>>(), brute.clone());
            let formula = if len >= t_p + t_f { (len - t_p - t_f) / stride + 1 } else { 0 };
            prop_assert_eq!(formula, brute.len());
        }
    }
}
