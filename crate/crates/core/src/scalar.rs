//! Scalar fields used by the algebra: exact rationals for identity checks and
//! `f64` for the ODE layer.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Arbitrary precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Whether arithmetic is exact. Exact scalars ignore numerical tolerances.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn ratio(numer: i64, denom: i64) -> Self {
        Self::from_i64(numer) / Self::from_i64(denom)
    }

    fn to_f64(&self) -> f64;

    /// Nearest representable value; exact for rationals.
    fn from_f64(v: f64) -> Self;

    /// Zero test: exact for exact scalars, `|x| <= tol` otherwise.
    fn is_negligible(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.to_f64().abs() <= tol
        }
    }

    /// Text form used by the debug dump: `p/q` for rationals.
    fn dump(&self) -> String;
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).unwrap_or_else(Zero::zero)
    }

    fn dump(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64(v: f64) -> Self {
        v
    }

    fn dump(&self) -> String {
        format!("{:.16e}", self)
    }
}

/// Shorthand for building exact rationals in tests and tables.
pub fn q(numer: i64, denom: i64) -> Rational {
    Rational::ratio(numer, denom)
}

/// Largest absolute value in a list, as `f64`.
pub fn max_abs<'a, S: Scalar>(values: impl IntoIterator<Item = &'a S>) -> f64 {
    values
        .into_iter()
        .map(|v| v.to_f64().abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_are_reduced() {
        let a = q(6, -4);
        assert_eq!(a.dump(), "-3/2");
        assert_eq!(q(4, 2).dump(), "2/1");
        assert!(q(0, 5).is_negligible(1.0));
        assert!(!q(1, 1_000_000_000).is_negligible(1.0));
    }

    #[test]
    fn float_tolerance() {
        assert!(1e-13_f64.is_negligible(1e-12));
        assert!(!1e-11_f64.is_negligible(1e-12));
        assert_eq!(<f64 as Scalar>::ratio(1, 4), 0.25);
    }
}
