use crate::error::{invalid, shape, Result};
use crate::model::McEnsemble;
use crate::scalar::Scalar;

/// Negative values this close to zero are rounding noise and clamp to 0.
pub const NEGATIVE_SLACK: f64 = 1e-12;

/// Variance of the member mean predictions, per element and aggregated.
#[derive(Clone, Debug, PartialEq)]
pub struct EpistemicReport<T = f64> {
    /// `T_f × 3J`.
    pub elementwise_variance: Vec<Vec<T>>,
    /// Mean over all elements.
    pub scalar_eu: T,
}

fn check<T: Scalar>(ensemble: &McEnsemble<T>) -> Result<()> {
    if ensemble.len() < 2 {
        return Err(invalid(format!("epistemic variance needs N >= 2 members, got {}", ensemble.len())));
    }
    let h = ensemble.horizon();
    let j = ensemble.n_joints();
    for m in &ensemble.members {
        if m.horizon() != h || m.mean_frames.iter().any(|f| f.n_joints() != j) {
            return Err(shape("ensemble members disagree in shape"));
        }
    }
    Ok(())
}

fn report<T: Scalar>(elementwise_variance: Vec<Vec<T>>) -> EpistemicReport<T> {
    let count = elementwise_variance.iter().map(Vec::len).sum::<usize>();
    let total: T = elementwise_variance.iter().flatten().copied().sum();
    let scalar_eu = if count == 0 { T::zero() } else { total / T::from_usize_lossy(count) };
    EpistemicReport { elementwise_variance, scalar_eu }
}

/// Two-pass population variance across members.
pub fn epistemic_variance<T: Scalar>(ensemble: &McEnsemble<T>) -> Result<EpistemicReport<T>> {
    check(ensemble)?;
    let n = T::from_usize_lossy(ensemble.len());
    let mean = ensemble.mean_prediction();
    let var = mean
        .iter()
        .enumerate()
        .map(|(t, mu)| {
            let mut acc = vec![T::zero(); mu.coords().len()];
            for m in &ensemble.members {
                for ((a, x), c) in acc.iter_mut().zip(m.mean_frames[t].coords()).zip(mu.coords()) {
                    let d = *x - *c;
                    *a += d * d;
                }
            }
            acc.iter_mut().for_each(|a| *a /= n);
            acc
        })
        .collect();
    Ok(report(var))
}

/// Second-moment-minus-squared-mean form, accumulated in one pass over
/// members. Values are shifted by the first member (variance is shift
/// invariant) to limit cancellation; tiny negative results clamp to 0.
pub fn epistemic_variance_single_pass<T: Scalar>(ensemble: &McEnsemble<T>) -> Result<EpistemicReport<T>> {
    check(ensemble)?;
    let n = T::from_usize_lossy(ensemble.len());
    let slack = T::lit(NEGATIVE_SLACK);
    let var = (0..ensemble.horizon())
        .map(|t| {
            let shift = ensemble.members[0].mean_frames[t].coords();
            let dim = shift.len();
            let mut s1 = vec![T::zero(); dim];
            let mut s2 = vec![T::zero(); dim];
            for m in &ensemble.members {
                for (i, x) in m.mean_frames[t].coords().iter().enumerate() {
                    let d = *x - shift[i];
                    s1[i] += d;
                    s2[i] += d * d;
                }
            }
            s1.iter()
                .zip(&s2)
                .map(|(a, b)| {
                    let mu = *a / n;
                    let v = *b / n - mu * mu;
                    if v < T::zero() && v > -slack {
                        T::zero()
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    Ok(report(var))
}
