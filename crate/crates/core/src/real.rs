//! Scalar abstraction shared by every DSP routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use realfft::FftNum;

/// Floating point sample type: `f32` or `f64`.
///
/// Physical configuration (positions, durations, reverberation times in a
/// room description) is always `f64`; sample buffers and everything derived
/// from them are generic over `Real`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to float")
    }
}

impl Real for f32 {}
impl Real for f64 {}
