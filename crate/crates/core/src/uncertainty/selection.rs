use crate::data::Pose;
use crate::error::{invalid, Result};
use crate::model::McEnsemble;
use crate::scalar::Scalar;

/// Scaling of σ̂ in the trustworthy-length test; about the one-sided 90% Gaussian quantile.
pub const DEFAULT_LAMBDA: f64 = 1.28;
/// Default error budget, meters.
pub const DEFAULT_E_MAX: f64 = 0.20;

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionResult<T = f64> {
    pub optimal_index: usize,
    pub trustworthy_length: usize,
    /// First `trustworthy_length` frames of the selected member.
    pub mean_frames: Vec<Pose<T>>,
    pub sigma: Vec<Vec<T>>,
}

/// Index of the member with the smallest total σ̂; lowest index wins ties.
pub fn select_optimal<T: Scalar>(ensemble: &McEnsemble<T>) -> usize {
    let mut best = (0usize, T::infinity());
    for (i, m) in ensemble.members.iter().enumerate() {
        let s: T = m.sigma.iter().flatten().copied().sum();
        if s < best.1 {
            best = (i, s);
        }
    }
    best.0
}

/// Worst-joint σ̂ per frame.
pub fn frame_sigma_max<T: Scalar>(sigma: &[Vec<T>]) -> Vec<T> {
    sigma.iter().map(|row| row.iter().copied().fold(T::neg_infinity(), T::max)).collect()
}

/// Longest prefix whose frames all satisfy `λ · max_j σ̂_{t,j} < e_max`.
pub fn trustworthy_length<T: Scalar>(sigma: &[Vec<T>], lambda: T, e_max: T) -> Result<usize> {
    if !(lambda > T::zero()) || !(e_max > T::zero()) {
        return Err(invalid("lambda and e_max must be positive"));
    }
    Ok(frame_sigma_max(sigma).iter().take_while(|s| lambda * **s < e_max).count())
}

pub fn select_and_truncate<T: Scalar>(ensemble: &McEnsemble<T>, lambda: T, e_max: T) -> Result<SelectionResult<T>> {
    let i = select_optimal(ensemble);
    let m = &ensemble.members[i];
    let len = trustworthy_length(&m.sigma, lambda, e_max)?;
    Ok(SelectionResult {
        optimal_index: i,
        trustworthy_length: len,
        mean_frames: m.mean_frames[..len].to_vec(),
        sigma: m.sigma[..len].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProbabilisticPrediction;

    fn member(sig: f64, t: usize) -> ProbabilisticPrediction {
        ProbabilisticPrediction {
            mean_frames: vec![Pose::from_coords(vec![0.0; 6]).unwrap(); t],
            sigma: vec![vec![sig; 2]; t],
            mask_seed: 0,
        }
    }

    #[test]
    fn dominance_and_ties() {
        let e = McEnsemble::new(vec![member(0.3, 4), member(0.2, 4), member(0.1, 4), member(0.4, 4)]).unwrap();
        assert_eq!(select_optimal(&e), 2);
        let tie = McEnsemble::new(vec![member(0.3, 4); 5]).unwrap();
        assert_eq!(select_optimal(&tie), 0);
    }

    #[test]
    fn hand_scanned_length() {
        let s: Vec<Vec<f64>> = [0.10, 0.12, 0.20, 0.30].iter().map(|v| vec![*v, v / 2.0]).collect();
        assert_eq!(trustworthy_length(&s, 1.28, 0.20).unwrap(), 2);
        assert_eq!(trustworthy_length(&vec![vec![0.01]; 50], 1.28, 0.20).unwrap(), 50);
        assert_eq!(trustworthy_length(&[vec![1.0], vec![0.01]], 1.28, 0.20).unwrap(), 0);
        assert!(trustworthy_length(&[vec![1.0]], 0.0, 0.20).is_err());
    }

    #[test]
    fn composition() {
        let e = McEnsemble::new(vec![member(0.3, 6), member(0.05, 6)]).unwrap();
        let r = select_and_truncate(&e, 1.28, 0.2).unwrap();
        assert_eq!(r.optimal_index, 1);
        assert_eq!(r.trustworthy_length, 6);
        assert_eq!(r.mean_frames.len(), 6);
        let i = select_optimal(&e);
        assert_eq!(trustworthy_length(&e.members[i].sigma, 1.28, 0.2).unwrap(), r.trustworthy_length);
    }
}
