//! Scalar abstraction shared by every numeric component.
//!
//! Probabilities, log scores, feature weights and network parameters are all
//! generic over [`Scalar`], which is implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + ndarray::LinalgScalar
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Rounds to the nearest multiple of 10^-6, the precision of the text
    /// model formats.
    #[inline]
    fn round6(self) -> Self {
        Self::lit((self.as_f64() * 1e6).round() / 1e6)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Floor used for log10 probabilities of impossible events.
pub const LOG10_FLOOR: f64 = -99.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round6_matches_text_precision() {
        let x = 0.123_456_789_f64.round6();
        let text = format!("{x:.6}");
        assert_eq!(text.parse::<f64>().unwrap(), x);
        assert_eq!(f32::lit(0.5), 0.5_f32);
    }
}
