//! Floating-point abstraction shared by every numerical routine in the crate.
//!
//! All core math is written against [`Scalar`], which is implemented for `f32`
//! and `f64`. Tolerances quoted throughout the documentation assume `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    /// Converts an `f64` constant into this type.
    ///
    /// Rounds to nearest for narrower types.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable")
    }

    /// Converts an index or count.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Reduces an angle into the half-open interval `[-pi, pi)`.
pub fn wrap_angle<T: Scalar>(x: T) -> T {
    let two_pi = T::TAU();
    let mut r = x - two_pi * ((x + T::PI()) / two_pi).floor();
    // floor() can leave r == pi when x + pi is an exact multiple after rounding
    if r >= T::PI() {
        r -= two_pi;
    }
    if r < -T::PI() {
        r += two_pi;
    }
    r
}

pub(crate) fn max_abs<T: Scalar>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_known_values() {
        assert_eq!(wrap_angle(0.0_f64), 0.0);
        assert_eq!(wrap_angle(PI), -PI);
        assert_eq!(wrap_angle(-PI), -PI);
        assert!((wrap_angle(2.0 * PI + 0.5) - 0.5).abs() < 1e-12);
        assert!((wrap_angle(-0.5_f32) + 0.5).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn wrap_lands_in_range_and_preserves_angle(x in -1e4_f64..1e4) {
            let w = wrap_angle(x);
            prop_assert!((-PI..PI).contains(&w));
            prop_assert!((w.sin() - x.sin()).abs() < 1e-9);
            prop_assert!((w.cos() - x.cos()).abs() < 1e-9);
        }
    }
}
