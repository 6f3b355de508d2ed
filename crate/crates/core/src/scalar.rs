//! Scalar abstractions shared by the closed-form model.
//!
//! [`Scalar`] covers field arithmetic only, so exact types such as
//! [`num_rational::BigRational`] can evaluate the purely rational parts of the
//! model (backoff means, drop probabilities). [`Real`] adds the transcendental
//! functions needed everywhere else and is implemented for `f32` and `f64`.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, NumCast, Signed};

/// Ordered field element that can be built from machine integers.
pub trait Scalar: Num + Signed + FromPrimitive + PartialOrd + Clone + Debug {
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    /// `self^exp` by repeated squaring; valid for exact and floating types alike.
    fn powu(&self, exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            base = base.clone() * base;
            e >>= 1;
        }
        acc
    }

    fn clamp_unit(self) -> Self {
        if self < Self::zero() {
            Self::zero()
        } else if self > Self::one() {
            Self::one()
        } else {
            self
        }
    }
}

impl<T> Scalar for T where T: Num + Signed + FromPrimitive + PartialOrd + Clone + Debug {}

/// Floating-point scalar used by every non-rational formula.
pub trait Real: Scalar + Float + NumCast + Copy + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
