//! Exact rationals and the scalar abstraction used for graph lengths.

use std::fmt::Debug;
use std::ops::{Add, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational with a positive denominator, always in reduced form.
pub type Rational = Ratio<i128>;

/// Exponent of `|s|`; a radius equal to `|s|^a` has valuation `a`.
pub type Valuation = Rational;

/// Lengths a [`crate::graph::MetricGraph`] can carry.
pub trait Length:
    Copy + PartialOrd + Debug + Add<Output = Self> + Sub<Output = Self> + Zero + Send + Sync
{
    fn half(self) -> Self;
    fn to_f64(self) -> f64;
    fn is_negative(self) -> bool {
        self < Self::zero()
    }
}

impl Length for Rational {
    fn half(self) -> Self {
        self / Rational::from_integer(2)
    }
    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Length for f64 {
    fn half(self) -> Self {
        0.5 * self
    }
    fn to_f64(self) -> f64 {
        self
    }
}

pub fn rat(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

pub fn to_f64(r: Rational) -> f64 {
    Length::to_f64(r)
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"-1.25"` or `"2e-3"`
/// into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = t.split_once('/') {
        let p = i128::from_str(p.trim()).map_err(|_| bad())?;
        let q = i128::from_str(q.trim()).map_err(|_| bad())?;
        if q == 0 {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], i32::from_str(&t[i + 1..]).map_err(|_| bad())?),
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{whole}{frac}");
    let numer = if all.is_empty() { 0 } else { i128::from_str(&all).map_err(|_| bad())? };
    let scale = exponent - frac.len() as i32;
    if scale.unsigned_abs() > 30 {
        return Err(Error::Parse(format!("exponent out of range in {text:?}")));
    }
    let pow = 10i128.pow(scale.unsigned_abs());
    let mut value = if scale >= 0 {
        Rational::from_integer(numer.checked_mul(pow).ok_or_else(bad)?)
    } else {
        Rational::new(numer, pow)
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Canonical `"p/q"` form; integers keep the explicit `/1`.
pub fn format_rational(r: Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn abs(r: Rational) -> Rational {
    r.abs()
}
