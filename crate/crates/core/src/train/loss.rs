use crate::data::MotionSequence;
use crate::error::{invalid, shape, Result};
use crate::model::ProbabilisticPrediction;
use crate::scalar::Scalar;

/// Lower bound applied to predicted variances inside the loss.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// The two parts of the heteroscedastic objective, both already averaged over frames and joints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossTerms<T> {
    pub weighted_mse: T,
    pub regularization: T,
}

impl<T: Scalar> LossTerms<T> {
    pub fn total(&self) -> T {
        self.weighted_mse + self.regularization
    }
}

/// Splits the objective into `Σ ‖r‖²/(2σ²)` and `Σ ½ log σ²`, each scaled by `1/(T_f·J)`.
pub fn hetero_nll_terms<T: Scalar>(pred: &ProbabilisticPrediction<T>, truth: &MotionSequence<T>) -> Result<LossTerms<T>> {
    let t_f = pred.horizon();
    if truth.len() != t_f {
        return Err(shape(format!("prediction horizon {t_f} vs truth length {}", truth.len())));
    }
    let j = pred.n_joints();
    if truth.n_joints() != j || pred.sigma.iter().any(|row| row.len() != j) {
        return Err(shape("joint counts differ between prediction and truth"));
    }
    let floor = T::lit(VARIANCE_FLOOR);
    let mut mse = T::zero();
    let mut reg = T::zero();
    for t in 0..t_f {
        for jj in 0..j {
            let s = pred.sigma[t][jj];
            if !(s > T::zero()) {
                return Err(invalid(format!("sigma at frame {} joint {jj} is not positive", t + 1)));
            }
            let var = (s * s).max(floor);
            let a = pred.mean_frames[t].joint(jj);
            let b = truth.frames[t].joint(jj);
            let r2 = (0..3).map(|c| (b[c] - a[c]) * (b[c] - a[c])).fold(T::zero(), |x, y| x + y);
            mse += r2 / (T::lit(2.0) * var);
            reg += T::lit(0.5) * var.ln();
        }
    }
    let norm = T::from_usize_lossy(t_f * j);
    Ok(LossTerms { weighted_mse: mse / norm, regularization: reg / norm })
}

/// `(1/T_f)(1/J) Σ_t Σ_j [‖x − x̂‖²/(2σ̂²) + ½ log σ̂²]`.
pub fn hetero_nll_loss<T: Scalar>(pred: &ProbabilisticPrediction<T>, truth: &MotionSequence<T>) -> Result<T> {
    Ok(hetero_nll_terms(pred, truth)?.total())
}
