//! Exact dyadic rationals `m * 2^e`.
//!
//! Values are kept normalized: the mantissa is odd, or the value is zero and
//! then the exponent is zero as well. Sums, differences and products of dyadic
//! rationals are dyadic again, so none of those operations ever round.
//!
//! ```
//! use convex_multifractal::dyadic::DyadicRational;
//!
//! let tiny = DyadicRational::pow2(-81);
//! let x = DyadicRational::one() + tiny.clone();
//! assert_eq!(x.to_string(), "2417851639229258349412353*2^-81");
//! assert_eq!(x.clone() - tiny, DyadicRational::one());
//!
//! let approx = x.to_f64().unwrap();
//! assert_eq!(approx.value, 1.0);
//! assert!(!approx.exact);
//! ```

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest admissible absolute exponent.
pub const MAX_EXPONENT: i64 = 1 << 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DyadicError {
    #[error("exponent {0} outside the supported range [-2^60, 2^60]")]
    ExponentRange(i128),
    #[error("value too large for f64")]
    Overflow,
    #[error("nonzero value rounds to zero in f64")]
    Underflow,
    #[error("cannot convert non-finite float {0}")]
    NonFinite(f64),
    #[error("logarithm of a non-positive value")]
    NonPositive,
    #[error("cannot parse {input:?} as m*2^e: {reason}")]
    Parse { input: String, reason: String },
}

/// Result of converting to `f64`: the nearest double (ties to even) and
/// whether the conversion was exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rounded {
    pub value: f64,
    pub exact: bool,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    mantissa: BigInt,
    exponent: i64,
}

fn check_exponent(e: i128) -> Result<i64, DyadicError> {
    if e.abs() > MAX_EXPONENT as i128 {
        Err(DyadicError::ExponentRange(e))
    } else {
        Ok(e as i64)
    }
}

/// Exact `2^k` as an `f64`, `k` in the normal range.
fn pow2_f64(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// `x * 2^k` without intermediate overflow; exact whenever the result is.
fn ldexp(mut x: f64, mut k: i64) -> f64 {
    while k > 1023 {
        x *= pow2_f64(1023);
        k -= 1023;
    }
    while k < -1022 {
        x *= pow2_f64(-1022);
        k += 1022;
    }
    x * pow2_f64(k)
}

impl DyadicRational {
    /// `mantissa * 2^exponent`, normalized.
    ///
    /// # Panics
    /// If the normalized exponent leaves the supported range.
    pub fn new(mantissa: impl Into<BigInt>, exponent: i64) -> Self {
        Self::try_new(mantissa, exponent as i128).expect("dyadic exponent out of range")
    }

    pub fn try_new(mantissa: impl Into<BigInt>, exponent: i128) -> Result<Self, DyadicError> {
        let mut mantissa = mantissa.into();
        if mantissa.is_zero() {
            return Ok(Self::zero());
        }
        let tz = mantissa.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            mantissa >>= tz;
        }
        let exponent = check_exponent(exponent + tz as i128)?;
        Ok(Self { mantissa, exponent })
    }

    pub fn zero() -> Self {
        Self {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            mantissa: BigInt::one(),
            exponent: 0,
        }
    }

    /// `2^k`.
    pub fn pow2(k: i64) -> Self {
        Self::new(1, k)
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self::new(n, 0)
    }

    /// Exact value of a finite double.
    pub fn from_f64(x: f64) -> Result<Self, DyadicError> {
        if !x.is_finite() {
            return Err(DyadicError::NonFinite(x));
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & ((1u64 << 52) - 1)) as i64;
        let (m, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1 << 52), biased - 1075)
        };
        Ok(Self::new(sign * m, e))
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mantissa.is_positive()
    }

    pub fn abs(&self) -> Self {
        Self {
            mantissa: self.mantissa.abs(),
            exponent: self.exponent,
        }
    }

    /// Mantissas of `self` and `other` scaled to their common (smaller)
    /// exponent.
    fn aligned(&self, other: &Self) -> (BigInt, BigInt, i64) {
        if self.is_zero() {
            return (BigInt::zero(), other.mantissa.clone(), other.exponent);
        }
        if other.is_zero() {
            return (self.mantissa.clone(), BigInt::zero(), self.exponent);
        }
        let e = self.exponent.min(other.exponent);
        let a = &self.mantissa << ((self.exponent - e) as usize);
        let b = &other.mantissa << ((other.exponent - e) as usize);
        (a, b, e)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, DyadicError> {
        let (a, b, e) = self.aligned(other);
        Self::try_new(a + b, e as i128)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, DyadicError> {
        let (a, b, e) = self.aligned(other);
        Self::try_new(a - b, e as i128)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, DyadicError> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        Self::try_new(
            &self.mantissa * &other.mantissa,
            self.exponent as i128 + other.exponent as i128,
        )
    }

    /// `self * 2^k`.
    pub fn checked_mul_pow2(&self, k: i64) -> Result<Self, DyadicError> {
        if self.is_zero() {
            return Ok(Self::zero());
        }
        let e = check_exponent(self.exponent as i128 + k as i128)?;
        Ok(Self {
            mantissa: self.mantissa.clone(),
            exponent: e,
        })
    }

    /// # Panics
    /// On exponent overflow.
    pub fn mul_pow2(&self, k: i64) -> Self {
        self.checked_mul_pow2(k)
            .expect("dyadic exponent out of range")
    }

    /// Largest integer `<= self`.
    pub fn floor(&self) -> BigInt {
        if self.exponent >= 0 {
            &self.mantissa << (self.exponent as usize)
        } else {
            // BigInt's right shift rounds toward negative infinity.
            &self.mantissa >> ((-self.exponent) as usize)
        }
    }

    /// Smallest integer `>= self`.
    pub fn ceil(&self) -> BigInt {
        -(-self).floor()
    }

    pub fn is_integer(&self) -> bool {
        self.exponent >= 0
    }

    /// Nearest `f64`, ties to even.
    pub fn to_f64(&self) -> Result<Rounded, DyadicError> {
        if self.is_zero() {
            return Ok(Rounded {
                value: 0.0,
                exact: true,
            });
        }
        let negative = self.mantissa.sign() == Sign::Minus;
        let mag: &BigUint = self.mantissa.magnitude();
        let bits = mag.bits() as i64;
        let top = self.exponent + bits - 1;
        if top > 1023 {
            return Err(DyadicError::Overflow);
        }
        let lsb = (top - 52).max(-1074);
        let shift = lsb - self.exponent;
        let (q, scale, exact) = if shift <= 0 {
            (mag.to_u64().expect("at most 53 bits"), self.exponent, true)
        } else {
            let shift = shift as usize;
            let q = mag >> shift;
            let rem = mag - (&q << shift);
            let half = BigUint::one() << (shift - 1);
            let round_up = match rem.cmp(&half) {
                Ordering::Greater => true,
                Ordering::Equal => q.bit(0),
                Ordering::Less => false,
            };
            let q = q.to_u64().expect("at most 53 bits") + round_up as u64;
            (q, lsb, rem.is_zero())
        };
        if q == 0 {
            return Err(DyadicError::Underflow);
        }
        if q == 1 << 53 && lsb + 53 > 1023 {
            return Err(DyadicError::Overflow);
        }
        let v = ldexp(q as f64, scale);
        Ok(Rounded {
            value: if negative { -v } else { v },
            exact,
        })
    }

    /// Nearest `f64`; saturates to infinities or zero outside the double range.
    pub fn to_f64_lossy(&self) -> f64 {
        match self.to_f64() {
            Ok(r) => r.value,
            Err(DyadicError::Overflow) => {
                if self.is_negative() {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => 0.0,
        }
    }

    /// Base-2 logarithm of a positive value, accurate even when the value
    /// itself is far outside the double range.
    pub fn log2(&self) -> Result<f64, DyadicError> {
        if !self.is_positive() {
            return Err(DyadicError::NonPositive);
        }
        let mag = self.mantissa.magnitude();
        let bits = mag.bits();
        let (top, dropped) = if bits > 64 {
            (
                (mag >> (bits - 64) as usize).to_u64().unwrap(),
                (bits - 64) as i64,
            )
        } else {
            (mag.to_u64().unwrap(), 0)
        };
        Ok((top as f64).log2() + (dropped + self.exponent) as f64)
    }
}

impl Default for DyadicRational {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for DyadicRational {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl From<BigInt> for DyadicRational {
    fn from(n: BigInt) -> Self {
        Self::from_int(n)
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mantissa.sign(), other.mantissa.sign());
        if sa != sb {
            return sa.cmp(&sb);
        }
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&DyadicRational> for &DyadicRational {
            type Output = DyadicRational;
            fn $method(self, rhs: &DyadicRational) -> DyadicRational {
                self.$checked(rhs).expect("dyadic exponent out of range")
            }
        }
        impl $tr<DyadicRational> for DyadicRational {
            type Output = DyadicRational;
            fn $method(self, rhs: DyadicRational) -> DyadicRational {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&DyadicRational> for DyadicRational {
            type Output = DyadicRational;
            fn $method(self, rhs: &DyadicRational) -> DyadicRational {
                (&self).$method(rhs)
            }
        }
        impl $tr<DyadicRational> for &DyadicRational {
            type Output = DyadicRational;
            fn $method(self, rhs: DyadicRational) -> DyadicRational {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl Neg for DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        DyadicRational {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Neg for &DyadicRational {
    type Output = DyadicRational;
    fn neg(self) -> DyadicRational {
        -self.clone()
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mantissa, self.exponent)
    }
}

impl fmt::Debug for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `m*2^e` and plain integers `m`. The result is normalized, so
/// `4*2^-3` parses to `1*2^-1`.
impl FromStr for DyadicRational {
    type Err = DyadicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| DyadicError::Parse {
            input: s.to_string(),
            reason: reason.into(),
        };
        let t = s.trim();
        let (m, e) = match t.split_once('*') {
            Some((m, rest)) => {
                let e = rest
                    .trim()
                    .strip_prefix("2^")
                    .ok_or_else(|| err("expected '2^' after '*'"))?;
                (m.trim(), e.trim())
            }
            None => (t, "0"),
        };
        let mantissa: BigInt = m.parse().map_err(|_| err("bad mantissa"))?;
        let exponent: i128 = e.parse().map_err(|_| err("bad exponent"))?;
        Self::try_new(mantissa, exponent)
    }
}

impl Serialize for DyadicRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DyadicRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(m: i64, e: i64) -> DyadicRational {
        DyadicRational::new(m, e)
    }

    #[test]
    fn addition_examples() {
        assert_eq!(d(1, 0) + DyadicRational::zero(), d(1, 0));
        assert_eq!(d(1, -16) + d(1, -16), d(1, -15));
        let big = (BigInt::one() << 81usize) + 1;
        assert_eq!(d(1, 0) + d(1, -81), DyadicRational::new(big, -81));
    }

    #[test]
    fn normalization() {
        let x = d(12, 3);
        assert_eq!(x.mantissa(), &BigInt::from(3));
        assert_eq!(x.exponent(), 5);
        let z = d(0, 17);
        assert_eq!(z.exponent(), 0);
        assert_eq!(DyadicRational::new(x.mantissa().clone(), x.exponent()), x);
    }

    #[test]
    fn comparison_examples() {
        assert!(DyadicRational::zero() < d(1, -100));
        assert!(d(3, -2) < d(1, 0));
        let rhs = d(1, -4) - d((1 << 12) - 1, -16);
        assert_eq!(d(1, -16).cmp(&rhs), Ordering::Equal);
        assert!(d(-1, 5) < d(-1, 4));
        assert!(d(-1, 0) < DyadicRational::zero());
    }

    #[test]
    fn float_conversion_examples() {
        assert_eq!(
            d(1, -4).to_f64().unwrap(),
            Rounded {
                value: 0.0625,
                exact: true
            }
        );
        let x = d(1, 0) + d(1, -81);
        assert_eq!(
            x.to_f64().unwrap(),
            Rounded {
                value: 1.0,
                exact: false
            }
        );
        assert_eq!(
            DyadicRational::zero().to_f64().unwrap(),
            Rounded {
                value: 0.0,
                exact: true
            }
        );
    }

    #[test]
    fn float_conversion_ties_and_ranges() {
        // 1 + 2^-53 is a tie between 1 and 1 + 2^-52; even mantissa wins.
        assert_eq!((d(1, 0) + d(1, -53)).to_f64().unwrap().value, 1.0);
        // 1 + 3*2^-53 rounds up to 1 + 2^-51.
        assert_eq!(
            (d(1, 0) + d(3, -53)).to_f64().unwrap().value,
            1.0 + 2f64.powi(-51)
        );
        assert_eq!(d(1, 1024).to_f64(), Err(DyadicError::Overflow));
        assert_eq!(d(1, -1075).to_f64(), Err(DyadicError::Underflow));
        assert_eq!(d(1, -1074).to_f64().unwrap().value, f64::from_bits(1));
        assert_eq!(
            d(3, -1075).to_f64().unwrap(),
            Rounded {
                value: f64::from_bits(2),
                exact: false
            }
        );
        assert_eq!(d(-5, 3).to_f64().unwrap().value, -40.0);
        // Rounding up past the largest finite double overflows.
        let near_max = DyadicRational::new((BigInt::one() << 54usize) - 1, 1024 - 54);
        assert_eq!(near_max.to_f64(), Err(DyadicError::Overflow));
    }

    #[test]
    fn exponent_range_is_checked() {
        let big = d(1, MAX_EXPONENT);
        assert!(matches!(
            big.checked_mul(&big),
            Err(DyadicError::ExponentRange(_))
        ));
        assert!(big.checked_mul_pow2(1).is_err());
        assert!("1*2^2000000000000000000".parse::<DyadicRational>().is_err());
    }

    #[test]
    fn floor_and_ceil() {
        assert_eq!(d(7, -1).floor(), BigInt::from(3));
        assert_eq!(d(-7, -1).floor(), BigInt::from(-4));
        assert_eq!(d(-7, -1).ceil(), BigInt::from(-3));
        assert_eq!(d(5, 2).floor(), BigInt::from(20));
    }

    #[test]
    fn log2_of_tiny_values() {
        assert_eq!(d(1, -1724).log2().unwrap(), -1724.0);
        let x = d(3, -5000);
        assert!((x.log2().unwrap() - (3f64.log2() - 5000.0)).abs() < 1e-12);
        assert!(DyadicRational::zero().log2().is_err());
    }

    #[test]
    fn text_form() {
        let x: DyadicRational = "-12*2^-3".parse().unwrap();
        assert_eq!(x, d(-3, -1));
        assert_eq!(x.to_string(), "-3*2^-1");
        assert_eq!("42".parse::<DyadicRational>().unwrap(), d(21, 1));
        assert!("1*3^4".parse::<DyadicRational>().is_err());
        assert!("x*2^4".parse::<DyadicRational>().is_err());
        let json = serde_json::to_string(&d(5, -7)).unwrap();
        assert_eq!(json, "\"5*2^-7\"");
        assert_eq!(
            serde_json::from_str::<DyadicRational>(&json).unwrap(),
            d(5, -7)
        );
    }

    fn arb_dyadic() -> impl Strategy<Value = DyadicRational> {
        (any::<i64>(), -200i64..200).prop_map(|(m, e)| DyadicRational::new(m, e))
    }

    proptest! {
        #[test]
        fn addition_is_associative(a in arb_dyadic(), b in arb_dyadic(), c in arb_dyadic()) {
            prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
        }

        #[test]
        fn subtraction_undoes_addition(a in arb_dyadic(), b in arb_dyadic()) {
            prop_assert_eq!(&(&a + &b) - &b, a);
        }

        #[test]
        fn normalizing_twice_is_a_no_op(a in arb_dyadic()) {
            let again = DyadicRational::new(a.mantissa().clone(), a.exponent());
            prop_assert_eq!(&again, &a);
            prop_assert!(a.is_zero() || a.mantissa().magnitude().bit(0));
        }

        #[test]
        fn order_matches_floats(x in any::<f64>(), y in any::<f64>()) {
            prop_assume!(x.is_finite() && y.is_finite());
            let (a, b) = (DyadicRational::from_f64(x).unwrap(), DyadicRational::from_f64(y).unwrap());
            prop_assert_eq!(a.cmp(&b), x.partial_cmp(&y).unwrap());
        }

        #[test]
        fn float_round_trip(x in any::<f64>()) {
            prop_assume!(x.is_finite() && x != 0.0);
            let r = DyadicRational::from_f64(x).unwrap().to_f64().unwrap();
            prop_assert!(r.exact);
            prop_assert_eq!(r.value, x);
        }

        #[test]
        fn text_round_trip(a in arb_dyadic()) {
            prop_assert_eq!(a.to_string().parse::<DyadicRational>().unwrap(), a);
        }

        #[test]
        fn conversion_is_nearest(m in any::<i64>(), e in -80i64..40) {
            // Compare against i128 arithmetic: the result must be within half an ulp.
            let a = DyadicRational::new(m, e);
            let r = a.to_f64().unwrap();
            let back = DyadicRational::from_f64(r.value).unwrap();
            let err = (&back - &a).abs();
            let ulp = DyadicRational::from_f64(r.value.abs() * f64::EPSILON).unwrap();
            prop_assert!(err.mul_pow2(1) <= ulp);
            prop_assert_eq!(r.exact, err.is_zero());
        }
    }
}
