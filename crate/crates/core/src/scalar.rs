//! Scalar abstraction shared by every field and operator.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type usable as a field value: `f32` or `f64`.
pub trait Real:
    Float
    + FftNum
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FftNum
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Default
        + Debug
        + Display
        + LowerExp
        + FromStr
        + Send
        + Sync
        + 'static
{
}

/// Cast an `f64` constant into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable")
}

/// Cast a `T` into `f64`.
#[inline]
pub fn f64_of<T: Real>(x: T) -> f64 {
    x.to_f64().expect("finite scalar")
}
