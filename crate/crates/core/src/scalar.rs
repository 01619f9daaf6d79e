//! Scalar types for edge weights, objective values and probabilities.
//!
//! Everything above this module is generic over [`Scalar`]. The exact
//! instantiation ([`Rational`]) is the one the guarantees are checked
//! against; `f64`/`f32` are available for quick runs on large inputs.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, the exact scalar.
pub type Rational = BigRational;

/// 2^64 as a `u128`; the coin threshold for probability one.
pub const COIN_SCALE: u128 = 1 << 64;

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + Sum + Send + Sync + 'static
{
    fn from_u64(x: u64) -> Self;

    /// `num / den`; `den` must be non-zero.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// The value as an integer, when it is one.
    fn to_integer(&self) -> Option<i128>;

    /// `floor(p * 2^64)` for `p` clamped to `[0, 1]`.
    ///
    /// A coin with bias `p` lands heads iff a uniform `u64` draw is strictly
    /// below this threshold, so `p = 1` always lands heads and `p = 0` never.
    fn coin_threshold(&self) -> u128;

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for BigRational {
    fn from_u64(x: u64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_integer(&self) -> Option<i128> {
        if self.is_integer() {
            self.numer().to_i128()
        } else {
            None
        }
    }

    fn coin_threshold(&self) -> u128 {
        if !self.is_positive() {
            return 0;
        }
        if *self >= BigRational::one() {
            return COIN_SCALE;
        }
        // numer < denom here, so the quotient is below 2^64.
        let scaled: BigInt = (self.numer() << 64u32) / self.denom();
        scaled.to_u128().unwrap_or(COIN_SCALE)
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_u64(x: u64) -> Self {
                x as $t
            }

            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn to_integer(&self) -> Option<i128> {
                if self.fract() == 0.0 && self.is_finite() {
                    Some(*self as i128)
                } else {
                    None
                }
            }

            fn coin_threshold(&self) -> u128 {
                if self.is_nan() || *self <= 0.0 {
                    0
                } else if *self >= 1.0 {
                    COIN_SCALE
                } else {
                    ((*self as f64) * COIN_SCALE as f64) as u128
                }
            }
        }
    };
}

impl_float_scalar!(f64);
impl_float_scalar!(f32);

/// Parses `"3"`, `"-2/7"` or `"0.125"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Parse {
        line: 0,
        message: format!("not a rational number: {text:?}"),
    };
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let digits = int.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit())
            || !digits.chars().all(|c| c.is_ascii_digit())
            || (digits.is_empty() && frac.is_empty())
        {
            return Err(bad());
        }
        let all: BigInt = format!("{digits}{frac}").parse().unwrap_or_else(|_| BigInt::zero());
        let den = num_traits::pow(BigInt::from(10u8), frac.len());
        let r = BigRational::new(all, den);
        return Ok(if negative { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Converts an exact rational into any scalar (lossy for floats).
pub fn rational_to<W: Scalar>(r: &Rational) -> W {
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(n), Some(d)) => W::from_ratio(n, d),
        _ => {
            let f = ToPrimitive::to_f64(r).unwrap_or(0.0);
            let scale = 1u64 << 52;
            let n = (f * scale as f64).round() as i64;
            W::from_ratio(n, scale as i64)
        }
    }
}

/// Smallest integer `>= r` for a positive rational.
pub fn ceil_to_usize(r: &Rational) -> Option<usize> {
    r.ceil().to_integer().to_usize()
}

pub(crate) fn from_usize<W: Scalar>(x: usize) -> W {
    W::from_u64(x as u64)
}

pub(crate) fn f64_of(r: &Rational) -> f64 {
    ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}
