//! Floating-point abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type the whole crate is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + FromStr
    + Display
    + Debug
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold,
    /// which never happens for `f32`/`f64` (they saturate to infinity).
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Standard normal CDF.
    fn normal_cdf(self) -> Self {
        let x = self.as_f64();
        Self::lit(0.5 * libm::erfc(-x / std::f64::consts::SQRT_2))
    }

    /// Error function.
    fn erf(self) -> Self {
        Self::lit(libm::erf(self.as_f64()))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Three-component Cartesian vector.
pub type Vec3<T> = [T; 3];

#[inline]
pub(crate) fn sub3<T: Scalar>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn norm_sq3<T: Scalar>(a: &Vec3<T>) -> T {
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2]
}

#[inline]
pub(crate) fn norm3<T: Scalar>(a: &Vec3<T>) -> T {
    norm_sq3(a).sqrt()
}
