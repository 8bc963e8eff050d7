//! Scalar abstraction: all physics code is generic over the floating-point
//! type through this trait. `f64` is the default used by the CLI; `f32` is
//! available for quick low-precision sweeps.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

pub trait Real:
    Float + FloatConst + FromPrimitive + FftNum + Sum<Self> + Display + LowerExp + Debug + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for lifting an `f64` literal into the working scalar type.
#[inline]
pub fn r<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 literal must be representable")
}
