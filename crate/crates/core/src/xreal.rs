//! Extended-precision real scalar.
//!
//! [`XReal`] is the working scalar of every kernel in this crate: a real
//! number carrying its own precision in bits of mantissa. Arithmetic between
//! two values is carried out at the larger of the two precisions, and
//! comparisons and formatting are deterministic for a fixed precision.
//!
//! The representation is an MPFR floating-point number (via the `rug`
//! crate), so the exponent range is effectively unbounded for this crate's
//! purposes: quantities like `Γ(10⁴)` are held directly without log-space
//! gymnastics.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::Pow;
use rug::Float;

/// Smallest admissible precision (IEEE double mantissa width).
pub const MIN_PRECISION: u32 = 53;

/// A real scalar with explicit precision in bits.
#[derive(Debug, Clone)]
pub struct XReal {
    inner: Float,
}

impl XReal {
    /// New value from an `f64`, carried at `prec` bits (clamped to
    /// [`MIN_PRECISION`] from below).
    pub fn new(prec: u32, value: f64) -> Self {
        XReal {
            inner: Float::with_val(prec.max(MIN_PRECISION), value),
        }
    }

    /// Zero at the given precision.
    pub fn zero(prec: u32) -> Self {
        Self::new(prec, 0.0)
    }

    /// One at the given precision.
    pub fn one(prec: u32) -> Self {
        Self::new(prec, 1.0)
    }

    pub(crate) fn from_float(f: Float) -> Self {
        debug_assert!(f.prec() >= MIN_PRECISION);
        XReal { inner: f }
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn into_float(self) -> Float {
        self.inner
    }

    /// Precision in bits of mantissa.
    pub fn precision(&self) -> u32 {
        self.inner.prec()
    }

    /// Round (or extend) to a new precision.
    pub fn with_precision(&self, prec: u32) -> Self {
        let mut f = self.inner.clone();
        f.set_prec_round(prec.max(MIN_PRECISION), Round::Nearest);
        XReal { inner: f }
    }

    /// Nearest `f64`.
    pub fn to_f64(&self) -> f64 {
        self.inner.to_f64()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.is_finite()
    }

    pub fn is_nan(&self) -> bool {
        self.inner.is_nan()
    }

    pub fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    /// Strictly positive (zero excluded).
    pub fn is_positive(&self) -> bool {
        self.inner.is_sign_positive() && !self.inner.is_zero() && !self.inner.is_nan()
    }

    pub fn abs(&self) -> Self {
        XReal {
            inner: self.inner.clone().abs(),
        }
    }

    pub fn exp(&self) -> Self {
        XReal {
            inner: self.inner.clone().exp(),
        }
    }

    /// Natural logarithm; NaN outside the domain.
    pub fn ln(&self) -> Self {
        XReal {
            inner: self.inner.clone().ln(),
        }
    }

    pub fn sqrt(&self) -> Self {
        XReal {
            inner: self.inner.clone().sqrt(),
        }
    }

    pub fn recip(&self) -> Self {
        XReal {
            inner: self.inner.clone().recip(),
        }
    }

    pub fn powi(&self, e: i32) -> Self {
        XReal {
            inner: self.inner.clone().pow(e),
        }
    }

    /// `self^e` for a real exponent, at the max of the two precisions.
    pub fn pow(&self, e: &XReal) -> Self {
        let p = self.precision().max(e.precision());
        XReal {
            inner: Float::with_val(p, (&self.inner).pow(&e.inner)),
        }
    }

    /// `self^e` for an `f64` exponent.
    pub fn powf(&self, e: f64) -> Self {
        let p = self.precision();
        XReal {
            inner: Float::with_val(p, (&self.inner).pow(Float::with_val(p, e))),
        }
    }

    /// Decimal decomposition `(negative, digits, exponent)` with
    /// `|value| = 0.digits × 10^exponent`, rounded to `digits` significant
    /// decimal digits. Zero yields `(false, "0", 0)`. Deterministic for a
    /// fixed precision; the building block for round-trip-safe rendering.
    pub fn decimal_parts(&self, digits: u32) -> (bool, String, i64) {
        let (neg, ds, exp) = self
            .inner
            .to_sign_string_exp(10, Some(digits.max(1) as usize));
        (neg, ds, exp.map(|e| e as i64).unwrap_or(0))
    }

    /// Relative difference `|self − other| / |other|` as `f64`; infinite when
    /// `other` is zero and `self` is not.
    pub fn rel_diff(&self, other: &XReal) -> f64 {
        if other.is_zero() {
            return if self.is_zero() { 0.0 } else { f64::INFINITY };
        }
        let p = self.precision().max(other.precision());
        let diff = Float::with_val(p, &self.inner - &other.inner).abs();
        let denom = other.inner.clone().abs();
        Float::with_val(p, diff / denom).to_f64()
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&XReal> for &XReal {
            type Output = XReal;
            fn $method(self, rhs: &XReal) -> XReal {
                let p = self.precision().max(rhs.precision());
                XReal {
                    inner: Float::with_val(p, (&self.inner).$method(&rhs.inner)),
                }
            }
        }
        impl $trait<XReal> for XReal {
            type Output = XReal;
            fn $method(self, rhs: XReal) -> XReal {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&XReal> for XReal {
            type Output = XReal;
            fn $method(self, rhs: &XReal) -> XReal {
                (&self).$method(rhs)
            }
        }
        impl $trait<XReal> for &XReal {
            type Output = XReal;
            fn $method(self, rhs: XReal) -> XReal {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for &XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal {
            inner: -self.inner.clone(),
        }
    }
}

impl Neg for XReal {
    type Output = XReal;
    fn neg(self) -> XReal {
        XReal { inner: -self.inner }
    }
}

impl PartialEq for XReal {
    fn eq(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

impl PartialOrd for XReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.inner.partial_cmp(&other.inner)
    }
}

impl PartialEq<f64> for XReal {
    fn eq(&self, other: &f64) -> bool {
        self.inner == *other
    }
}

impl PartialOrd<f64> for XReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.inner.partial_cmp(other)
    }
}

impl fmt::Display for XReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.inner.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_is_clamped_from_below() {
        let x = XReal::new(10, 1.5);
        assert_eq!(x.precision(), MIN_PRECISION);
    }

    #[test]
    fn arithmetic_uses_max_precision() {
        let a = XReal::new(100, 1.0);
        let b = XReal::new(200, 2.0);
        assert_eq!((&a + &b).precision(), 200);
        assert_eq!((&a * &b).precision(), 200);
        assert_eq!((&b - &a).precision(), 200);
        assert_eq!((&a / &b).precision(), 200);
    }

    #[test]
    fn comparisons_are_exact() {
        let a = XReal::new(128, 0.5);
        let b = XReal::new(64, 0.5);
        assert_eq!(a, b);
        assert!(XReal::new(64, 0.25) < a);
        assert!(a > 0.25);
    }

    #[test]
    fn rel_diff_basic() {
        let a = XReal::new(128, 1.0);
        let b = XReal::new(128, 1.0 + 1e-12);
        assert!((a.rel_diff(&b) - 1e-12).abs() < 1e-15);
    }
}
