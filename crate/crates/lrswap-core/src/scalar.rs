//! Scalar ring abstraction.
//!
//! The identity suites run over arbitrary-precision rationals so that every
//! pass is an exact algebraic statement; the contour quadrature runs over
//! double-precision complex numbers. Both instantiate [`Scalar`].

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::complex::Complex64;
use num::{BigInt, BigRational, ToPrimitive};

pub trait Scalar:
    Clone
    + PartialEq
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Whether equality of values is an exact statement.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_int(v: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn recip(&self) -> Self;
    /// Absolute value as `f64`, for discrepancy reporting only.
    fn magnitude(&self) -> f64;
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        num::Zero::zero()
    }

    fn one() -> Self {
        num::One::one()
    }

    fn is_zero(&self) -> bool {
        num::Zero::is_zero(self)
    }

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn recip(&self) -> Self {
        assert!(!Scalar::is_zero(self), "reciprocal of zero");
        BigRational::recip(self)
    }

    fn magnitude(&self) -> f64 {
        self.to_f64().map(f64::abs).unwrap_or(f64::INFINITY)
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn from_int(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }

    fn recip(&self) -> Self {
        self.inv()
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Shorthand for an exact rational.
pub fn rat(num: i64, den: i64) -> BigRational {
    <BigRational as Scalar>::from_ratio(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_ring_ops() {
        let x = rat(2, 3);
        let y = Scalar::recip(&x);
        assert_eq!(y, rat(3, 2));
        assert_eq!(x.clone() * y, rat(1, 1));
        assert!(Scalar::is_zero(&(x.clone() - x)));
    }

    #[test]
    fn complex_magnitude() {
        let z = Complex64::new(3.0, 4.0);
        assert_eq!(Scalar::magnitude(&z), 5.0);
    }
}
