use crate::data::pose::MotionSequence;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Repeats the last observed frame `t_f` times. `t_f = 0` gives an empty sequence.
pub fn zero_velocity_baseline<T: Scalar>(
    observed: &MotionSequence<T>,
    t_f: usize,
) -> Result<MotionSequence<T>> {
    let last = observed.last().ok_or_else(|| invalid("observed sequence is empty"))?;
    Ok(MotionSequence {
        frames: vec![last.clone(); t_f],
        frame_rate_hz: observed.frame_rate_hz,
        label: observed.label.clone(),
    })
}
