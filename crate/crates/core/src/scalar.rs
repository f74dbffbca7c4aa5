//! Scalar abstraction for rates and probabilities.
//!
//! Rule tables and generators are generic over [`Scalar`], so the same
//! construction can run in `f64`, `f32`, or exact rationals. Anything that
//! needs `exp`/`ln` (uniformization, sampling) additionally requires
//! [`num_traits::Float`].

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Exact rational scalar used for rate audits.
pub type Rational = num_rational::Ratio<i64>;

/// Numeric type usable as a rate.
pub trait Scalar:
    Num + Clone + Debug + PartialOrd + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Lossy conversion used by the simulation engine.
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `|self - other| <= tol`, evaluated in `f64` after exact subtraction.
    fn close_to(&self, other: &Self, tol: f64) -> bool {
        let diff = if *self >= *other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        };
        diff.to_f64_lossy() <= tol
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
impl Scalar for Rational {}

/// Builds a scalar from a small integer ratio (exact for rationals).
pub(crate) fn ratio<S: Scalar>(num: i64, den: i64) -> S {
    S::from_i64(num).expect("integer fits scalar") / S::from_i64(den).expect("integer fits scalar")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_is_exact() {
        let a: Rational = ratio(1, 3);
        let b: Rational = ratio(2, 6);
        assert_eq!(a, b);
        assert!(a.close_to(&b, 0.0));
    }

    #[test]
    fn float_tolerance() {
        assert!(0.1f64.close_to(&(0.1 + 1e-13), 1e-12));
        assert!(!0.1f64.close_to(&0.2, 1e-12));
    }
}
