//! Signed real numbers stored as `(sign, ln|x|)`.
//!
//! Binomial coefficients such as `C(10^4, 300)` and the variances built from
//! them overflow `f64` long before the quantities of interest become
//! interesting, so every large magnitude in the crate travels as a [`LogNum`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::Serialize;

/// Relative distance from exact cancellation below which an opposite-sign
/// sum is declared zero.
pub const CANCELLATION_EPS: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LogNum {
    sign: i8,
    /// `ln|x|`; `-inf` (serialized as `null`) when `sign == 0`.
    ln_abs: f64,
}

impl LogNum {
    pub const ZERO: LogNum = LogNum {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
    };
    pub const ONE: LogNum = LogNum {
        sign: 1,
        ln_abs: 0.0,
    };

    pub fn new(sign: i8, ln_abs: f64) -> Self {
        if sign == 0 || ln_abs == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        debug_assert!(!ln_abs.is_nan(), "LogNum with NaN magnitude");
        LogNum {
            sign: sign.signum(),
            ln_abs,
        }
    }

    /// Positive number with the given natural log.
    pub fn from_ln(ln_abs: f64) -> Self {
        Self::new(1, ln_abs)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else if x > 0.0 {
            Self::new(1, x.ln())
        } else {
            Self::new(-1, (-x).ln())
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn ln_abs(&self) -> f64 {
        self.ln_abs
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn is_positive(&self) -> bool {
        self.sign > 0
    }

    /// Overflows to `±inf` and underflows to `0` like any `exp`.
    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln_abs.exp(),
        }
    }

    pub fn abs(self) -> Self {
        Self::new(self.sign.abs(), self.ln_abs)
    }

    pub fn powi(self, k: i32) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && k % 2 != 0 { -1 } else { 1 };
        Self::new(sign, self.ln_abs * f64::from(k))
    }

    /// Square root of a non-negative value.
    pub fn sqrt(self) -> Self {
        assert!(self.sign >= 0, "square root of a negative LogNum");
        Self::new(self.sign, self.ln_abs / 2.0)
    }

    /// Sum that also reports whether an opposite-sign addition cancelled to
    /// within [`CANCELLATION_EPS`] and was therefore declared zero.
    pub fn add_flagged(self, other: Self) -> (Self, bool) {
        if self.sign == 0 {
            return (other, false);
        }
        if other.sign == 0 {
            return (self, false);
        }
        let (big, small) = if self.ln_abs >= other.ln_abs {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (small.ln_abs - big.ln_abs).exp();
        if big.sign == small.sign {
            (Self::new(big.sign, big.ln_abs + ratio.ln_1p()), false)
        } else if 1.0 - ratio <= CANCELLATION_EPS {
            (Self::ZERO, true)
        } else {
            (Self::new(big.sign, big.ln_abs + (-ratio).ln_1p()), false)
        }
    }

    /// `self / other` as a plain float; useful for O(1) ratios of huge values.
    pub fn ratio(self, other: Self) -> f64 {
        (self / other).to_f64()
    }
}

impl Default for LogNum {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for LogNum {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Mul for LogNum {
    type Output = LogNum;

    fn mul(self, rhs: LogNum) -> LogNum {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        Self::new(self.sign * rhs.sign, self.ln_abs + rhs.ln_abs)
    }
}

impl Div for LogNum {
    type Output = LogNum;

    fn div(self, rhs: LogNum) -> LogNum {
        assert!(rhs.sign != 0, "LogNum division by zero");
        if self.sign == 0 {
            return Self::ZERO;
        }
        Self::new(self.sign * rhs.sign, self.ln_abs - rhs.ln_abs)
    }
}

impl Neg for LogNum {
    type Output = LogNum;

    fn neg(self) -> LogNum {
        Self::new(-self.sign, self.ln_abs)
    }
}

impl Add for LogNum {
    type Output = LogNum;

    fn add(self, rhs: LogNum) -> LogNum {
        self.add_flagged(rhs).0
    }
}

impl Sub for LogNum {
    type Output = LogNum;

    fn sub(self, rhs: LogNum) -> LogNum {
        self + (-rhs)
    }
}

impl PartialEq for LogNum {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for LogNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.ln_abs.partial_cmp(&other.ln_abs),
                _ => other.ln_abs.partial_cmp(&self.ln_abs),
            },
            ord => Some(ord),
        }
    }
}

impl std::iter::Sum for LogNum {
    fn sum<I: Iterator<Item = LogNum>>(iter: I) -> LogNum {
        iter.fold(LogNum::ZERO, |acc, x| acc + x)
    }
}

impl fmt::Display for LogNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => {
                // Render as mantissa x 10^exp so huge values stay readable.
                let log10 = self.ln_abs / std::f64::consts::LN_10;
                let exp = log10.floor();
                let mant = 10f64.powf(log10 - exp);
                let sign = if s < 0 { "-" } else { "" };
                if (-6.0..16.0).contains(&exp) {
                    write!(f, "{sign}{}", self.ln_abs.exp())
                } else {
                    write!(f, "{sign}{mant:.12}e{exp}")
                }
            }
        }
    }
}

/// `ln(exp(a) + exp(b))` for plain log-weights.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let max = a.max(b);
    max + (-(a - b).abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn round_trips_plain_floats() {
        for x in [-3.5, -1e-200, 0.0, 1e-300, 2.0, 7.25e250] {
            let y = LogNum::from_f64(x).to_f64();
            assert!(close(x, y, 1e-13), "{x} vs {y}");
        }
    }

    #[test]
    fn same_sign_and_opposite_sign_addition() {
        let a = LogNum::from_f64(3.0);
        let b = LogNum::from_f64(-1.0);
        assert!(close((a + b).to_f64(), 2.0, 1e-15));
        assert!(close((b + a).to_f64(), 2.0, 1e-15));
        assert!(close((b + b).to_f64(), -2.0, 1e-15));
        assert!(close((a - a - a).to_f64(), -3.0, 1e-15));
    }

    #[test]
    fn exact_cancellation_is_flagged_zero() {
        let a = LogNum::from_ln(1000.0);
        let (s, flagged) = a.add_flagged(-a);
        assert!(s.is_zero());
        assert!(flagged);
        let (s, flagged) = a.add_flagged(LogNum::ZERO);
        assert_eq!(s, a);
        assert!(!flagged);
    }

    #[test]
    fn huge_magnitudes_do_not_overflow() {
        let big = LogNum::from_ln(5000.0);
        let prod = big * big;
        assert_eq!(prod.ln_abs(), 10000.0);
        let q = prod / big;
        assert!(close(q.ln_abs(), 5000.0, 1e-15));
        assert!((big.ratio(big) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ordering_respects_sign() {
        let neg_big = LogNum::from_f64(-1e10);
        let neg_small = LogNum::from_f64(-1.0);
        assert!(neg_big < neg_small);
        assert!(neg_small < LogNum::ZERO);
        assert!(LogNum::ZERO < LogNum::from_f64(1e-10));
        assert!(LogNum::from_ln(10.0) > LogNum::from_ln(9.0));
    }

    #[test]
    fn zero_serializes_with_null_magnitude() {
        let s = serde_json::to_string(&LogNum::ZERO).unwrap();
        assert_eq!(s, r#"{"sign":0,"ln_abs":null}"#);
    }
}
