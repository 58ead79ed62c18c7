use crate::data::Pose;
use crate::error::{shape, Result};
use crate::scalar::Scalar;

/// `[x, v, a]` built from three consecutive frames: position, first and second difference.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsFeature<T = f64> {
    pub position: Vec<T>,
    pub velocity: Vec<T>,
    pub acceleration: Vec<T>,
}

impl<T: Scalar> DynamicsFeature<T> {
    /// Concatenation `[x, v, a]`, length `9J`.
    pub fn to_vec(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(3 * self.position.len());
        out.extend_from_slice(&self.position);
        out.extend_from_slice(&self.velocity);
        out.extend_from_slice(&self.acceleration);
        out
    }
}

pub fn dynamics_features<T: Scalar>(first: &Pose<T>, second: &Pose<T>, third: &Pose<T>) -> Result<DynamicsFeature<T>> {
    let n = third.coords().len();
    if first.coords().len() != n || second.coords().len() != n {
        return Err(shape("dynamics features need three frames with the same joint count"));
    }
    let mut buf = vec![T::zero(); 3 * n];
    dynamics_into(first.coords(), second.coords(), third.coords(), &mut buf);
    let acceleration = buf.split_off(2 * n);
    let velocity = buf.split_off(n);
    Ok(DynamicsFeature { position: buf, velocity, acceleration })
}

/// Writes `[x, v, a]` for flat coordinate slices into `out` (length `3·len`).
#[inline]
pub fn dynamics_into<T: Scalar>(first: &[T], second: &[T], third: &[T], out: &mut [T]) {
    let n = third.len();
    debug_assert_eq!(out.len(), 3 * n);
    for i in 0..n {
        let v = third[i] - second[i];
        let v_prev = second[i] - first[i];
        out[i] = third[i];
        out[n + i] = v;
        out[2 * n + i] = v - v_prev;
    }
}
