//! Log-space scalars for nonnegative quantities far outside the `f64` range.
//!
//! A [`LogScalar`] stores either an exact zero or the base-10 exponent of a
//! positive magnitude. Multiplication and powers act on the exponent, so
//! a prefactor like `10^405.8` costs nothing to carry around.
//!
//! ```
//! use queuebound::xnum::LogScalar;
//!
//! let c = LogScalar::from_exp10(405.80364).unwrap();
//! let x = LogScalar::from_value(10.0).unwrap();
//! let bound = c * x.pow(-1.5).unwrap();
//! assert!((bound.exp10().unwrap() - 404.30364).abs() < 1e-9);
//! assert_eq!(bound.to_probability(), 1.0);
//! assert_eq!(bound.to_string(), "10^{404.3036}");
//! ```

use std::cmp::Ordering;
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exponent gap beyond which the smaller addend is dropped.
const ADD_CUTOFF_DECADES: f64 = 40.0;

/// Rendering switches from plain decimal to `10^{E}` above this `|E|`.
const PLAIN_RENDER_LIMIT: f64 = 15.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum XnumError {
    #[error("invalid input {0}: value must be finite and nonnegative")]
    InvalidInput(f64),
    #[error("invalid exponent {0}: exponent must be finite")]
    InvalidExponent(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero raised to nonpositive power {0}")]
    ZeroToNonPositive(f64),
}

/// Binary operations accepted by [`combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Mul,
    Div,
    Add,
}

/// A nonnegative real stored as zero or `10^exp10`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogScalar {
    Zero,
    Pos(f64),
}

impl LogScalar {
    pub const ONE: LogScalar = LogScalar::Pos(0.0);
    pub const ZERO: LogScalar = LogScalar::Zero;

    pub fn from_value(v: f64) -> Result<Self, XnumError> {
        if !v.is_finite() || v < 0.0 {
            return Err(XnumError::InvalidInput(v));
        }
        if v == 0.0 {
            Ok(LogScalar::Zero)
        } else {
            Ok(LogScalar::Pos(v.log10()))
        }
    }

    pub fn from_exp10(e: f64) -> Result<Self, XnumError> {
        if !e.is_finite() {
            return Err(XnumError::InvalidExponent(e));
        }
        Ok(LogScalar::Pos(e))
    }

    /// Base-10 exponent, `None` for zero.
    pub fn exp10(self) -> Option<f64> {
        match self {
            LogScalar::Zero => None,
            LogScalar::Pos(e) => Some(e),
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, LogScalar::Zero)
    }

    pub fn div(self, other: LogScalar) -> Result<Self, XnumError> {
        match (self, other) {
            (_, LogScalar::Zero) => Err(XnumError::DivisionByZero),
            (LogScalar::Zero, _) => Ok(LogScalar::Zero),
            (LogScalar::Pos(a), LogScalar::Pos(b)) => Ok(LogScalar::Pos(a - b)),
        }
    }

    pub fn add(self, other: LogScalar) -> Self {
        match (self, other) {
            (LogScalar::Zero, x) | (x, LogScalar::Zero) => x,
            (LogScalar::Pos(a), LogScalar::Pos(b)) => {
                let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
                let gap = lo - hi;
                if gap < -ADD_CUTOFF_DECADES {
                    LogScalar::Pos(hi)
                } else {
                    LogScalar::Pos(hi + (10f64.powf(gap)).ln_1p() / std::f64::consts::LN_10)
                }
            }
        }
    }

    pub fn pow(self, e: f64) -> Result<Self, XnumError> {
        if !e.is_finite() {
            return Err(XnumError::InvalidExponent(e));
        }
        match self {
            LogScalar::Zero if e > 0.0 => Ok(LogScalar::Zero),
            LogScalar::Zero => Err(XnumError::ZeroToNonPositive(e)),
            LogScalar::Pos(a) => Ok(LogScalar::Pos(a * e)),
        }
    }

    /// `min(1, value)`; exactly 1 whenever the exponent is nonnegative.
    pub fn to_probability(self) -> f64 {
        match self {
            LogScalar::Zero => 0.0,
            LogScalar::Pos(e) if e >= 0.0 => 1.0,
            LogScalar::Pos(e) => 10f64.powf(e),
        }
    }

    /// Ordinary real value; saturates to `inf` or `0` outside the `f64` range.
    pub fn to_f64(self) -> f64 {
        match self {
            LogScalar::Zero => 0.0,
            LogScalar::Pos(e) => 10f64.powf(e),
        }
    }

    /// Sum of an iterator of scalars.
    pub fn sum<I: IntoIterator<Item = LogScalar>>(items: I) -> Self {
        items.into_iter().fold(LogScalar::Zero, LogScalar::add)
    }
}

/// Applies `op` to `a` and `b`.
pub fn combine(a: LogScalar, b: LogScalar, op: Op) -> Result<LogScalar, XnumError> {
    match op {
        Op::Mul => Ok(a * b),
        Op::Div => a.div(b),
        Op::Add => Ok(a.add(b)),
    }
}

impl Mul for LogScalar {
    type Output = LogScalar;

    fn mul(self, rhs: LogScalar) -> LogScalar {
        match (self, rhs) {
            (LogScalar::Pos(a), LogScalar::Pos(b)) => LogScalar::Pos(a + b),
            _ => LogScalar::Zero,
        }
    }
}

impl PartialOrd for LogScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (LogScalar::Zero, LogScalar::Zero) => Some(Ordering::Equal),
            (LogScalar::Zero, LogScalar::Pos(_)) => Some(Ordering::Less),
            (LogScalar::Pos(_), LogScalar::Zero) => Some(Ordering::Greater),
            (LogScalar::Pos(a), LogScalar::Pos(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LogScalar::Zero => write!(f, "0"),
            LogScalar::Pos(e) if e.abs() > PLAIN_RENDER_LIMIT => write!(f, "10^{{{e:.4}}}"),
            LogScalar::Pos(e) => {
                let decimals = (9.0 - e.floor()).max(0.0) as usize;
                let s = format!("{:.*}", decimals, 10f64.powf(e));
                let s = if s.contains('.') {
                    s.trim_end_matches('0').trim_end_matches('.').to_string()
                } else {
                    s
                };
                write!(f, "{s}")
            }
        }
    }
}

impl Serialize for LogScalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.exp10().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LogScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match Option::<f64>::deserialize(d)? {
            None => Ok(LogScalar::Zero),
            Some(e) => LogScalar::from_exp10(e).map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(x: f64) -> LogScalar {
        LogScalar::from_exp10(x).unwrap()
    }

    #[test]
    fn from_value_examples() {
        assert_eq!(LogScalar::from_value(0.0).unwrap(), LogScalar::Zero);
        assert_eq!(LogScalar::from_value(1.0).unwrap(), LogScalar::Pos(0.0));
        let big = LogScalar::from_value(1e308).unwrap().exp10().unwrap();
        assert!((big - 308.0).abs() < 1e-12);
    }

    #[test]
    fn from_value_rejects_bad_input() {
        assert!(matches!(LogScalar::from_value(-1.0), Err(XnumError::InvalidInput(_))));
        assert!(LogScalar::from_value(f64::NAN).is_err());
        assert!(LogScalar::from_value(f64::INFINITY).is_err());
        assert!(LogScalar::from_exp10(f64::NAN).is_err());
    }

    #[test]
    fn combine_examples() {
        let p = combine(e(405.80), e(1.0), Op::Mul).unwrap();
        assert!((p.exp10().unwrap() - 406.80).abs() < 1e-12);
        let s = combine(e(2.0), e(2.0), Op::Add).unwrap();
        assert!((s.exp10().unwrap() - 200f64.log10()).abs() < 1e-12);
        assert!((s.exp10().unwrap() - 2.30103).abs() < 1e-5);
        assert_eq!(combine(e(300.0), LogScalar::Zero, Op::Add).unwrap(), e(300.0));
        assert_eq!(combine(e(1.0), LogScalar::Zero, Op::Div), Err(XnumError::DivisionByZero));
    }

    #[test]
    fn add_far_apart_short_circuits() {
        assert_eq!(e(100.0).add(e(50.0)), e(100.0));
        let near = e(10.0).add(e(-20.0));
        assert!((near.exp10().unwrap() - 10.0).abs() < 1e-29);
    }

    #[test]
    fn pow_examples() {
        assert_eq!(e(2.0).pow(3.0).unwrap(), e(6.0));
        let c = e(135.26788).pow(3.0).unwrap().exp10().unwrap();
        assert!((c - 405.80364).abs() < 1e-9);
        assert_eq!(LogScalar::Zero.pow(2.5).unwrap(), LogScalar::Zero);
        assert!(matches!(LogScalar::Zero.pow(0.0), Err(XnumError::ZeroToNonPositive(_))));
        assert!(LogScalar::Zero.pow(-1.0).is_err());
    }

    #[test]
    fn probability_examples() {
        assert_eq!(e(405.8).to_probability(), 1.0);
        assert_eq!(e(0.0).to_probability(), 1.0);
        assert!((e(-2.2).to_probability() - 0.00631).abs() < 1e-5);
        assert_eq!(LogScalar::Zero.to_probability(), 0.0);
    }

    #[test]
    fn rendering() {
        assert_eq!(e(404.30364).to_string(), "10^{404.3036}");
        assert_eq!(e(-20.5).to_string(), "10^{-20.5000}");
        assert_eq!(LogScalar::from_value(49152.0).unwrap().to_string(), "49152");
        assert_eq!(LogScalar::from_value(9.05).unwrap().to_string(), "9.05");
        assert_eq!(LogScalar::from_value(0.25).unwrap().to_string(), "0.25");
        assert_eq!(LogScalar::Zero.to_string(), "0");
    }

    #[test]
    fn ordering_puts_zero_first() {
        assert!(LogScalar::Zero < e(-300.0));
        assert!(e(1.0) < e(2.0));
    }

    #[test]
    fn serde_round_trip() {
        let json = serde_json::to_string(&e(3.5)).unwrap();
        assert_eq!(json, "3.5");
        assert_eq!(serde_json::from_str::<LogScalar>("null").unwrap(), LogScalar::Zero);
        assert_eq!(serde_json::from_str::<LogScalar>(&json).unwrap(), e(3.5));
    }

    proptest! {
        #[test]
        fn round_trip(m in 1.0f64..10.0, k in -300i32..300) {
            let v = m * 10f64.powi(k);
            let back = LogScalar::from_value(v).unwrap().to_f64();
            prop_assert!(((back - v) / v).abs() <= 1e-12);
        }

        #[test]
        fn mul_then_div(a in -5000.0f64..5000.0, b in -5000.0f64..5000.0) {
            let r = (e(a) * e(b)).div(e(b)).unwrap().exp10().unwrap();
            prop_assert!((r - a).abs() <= 1e-9);
        }

        #[test]
        fn add_commutes_and_dominates(a in -1000.0f64..1000.0, b in -1000.0f64..1000.0) {
            let ab = e(a).add(e(b));
            prop_assert_eq!(ab, e(b).add(e(a)));
            prop_assert!(ab.exp10().unwrap() >= a.max(b));
            prop_assert!(ab.exp10().unwrap() <= a.max(b) + 2f64.log10() + 1e-12);
        }

        #[test]
        fn probability_monotone(a in -400.0f64..400.0, d in 0.0f64..50.0) {
            let lo = e(a).to_probability();
            let hi = e(a + d).to_probability();
            prop_assert!(lo <= hi);
            prop_assert!((0.0..=1.0).contains(&lo));
            let again = LogScalar::from_value(lo).map(|x| x.to_probability()).unwrap();
            prop_assert!((again - lo).abs() <= 1e-12 * lo.max(1e-300));
        }

        #[test]
        fn pow_scales_exponent(a in -100.0f64..100.0, p in -10.0f64..10.0) {
            let r = e(a).pow(p).unwrap().exp10().unwrap();
            prop_assert!((r - a * p).abs() <= 1e-9);
        }
    }
}
