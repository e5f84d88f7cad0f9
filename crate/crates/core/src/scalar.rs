//! Numeric back ends.
//!
//! Everything in the crate is generic over [`Scalar`]. Two implementations exist:
//! [`Rational`] (arbitrary-precision, all comparisons exact) and `f64` (comparisons with a
//! relative tolerance of [`FLOAT_TOLERANCE`]).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Relative tolerance used by the float back end.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    Float,
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericMode::Exact => f.write_str("exact"),
            NumericMode::Float => f.write_str("float"),
        }
    }
}

/// A number as it appears in JSON: either a string (`"2/3"`, `"0.25"`) or a plain number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WireNum {
    Text(String),
    Float(f64),
}

impl WireNum {
    pub fn parse<T: Scalar>(&self) -> Result<T> {
        match self {
            WireNum::Text(s) => T::parse_num(s),
            WireNum::Float(x) => T::from_f64(*x),
        }
    }
}

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const MODE: NumericMode;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Exact for rationals (every finite double is a dyadic rational); fails on NaN/inf.
    fn from_f64(x: f64) -> Result<Self>;

    fn to_f64(&self) -> f64;

    /// Accepts `"p/q"`, integers and decimals with an optional exponent.
    fn parse_num(text: &str) -> Result<Self>;

    fn to_wire(&self) -> WireNum;

    fn floor(&self) -> Self;

    /// Equality up to the back end's tolerance.
    fn near(&self, other: &Self) -> bool;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    /// `self >= other` up to the back end's tolerance.
    fn at_least(&self, other: &Self) -> bool {
        self >= other || self.near(other)
    }

    fn near_zero(&self) -> bool {
        self.near(&Self::zero())
    }

    fn is_negative_strict(&self) -> bool {
        !self.at_least(&Self::zero())
    }

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn ln(&self) -> f64 {
        self.to_f64().ln()
    }

    fn log2(&self) -> f64 {
        self.to_f64().log2()
    }
}

pub fn min_of<T: Scalar>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

pub fn max_of<T: Scalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

pub fn sum<'a, T: Scalar, I: IntoIterator<Item = &'a T>>(items: I) -> T {
    items.into_iter().fold(T::zero(), |acc, x| acc + x.clone())
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Float;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_f64(x: f64) -> Result<Self> {
        if x.is_nan() {
            return Err(Error::Parse { text: x.to_string(), reason: "NaN".into() });
        }
        Ok(x)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn parse_num(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: f64 = parse_float(n, text)?;
            let d: f64 = parse_float(d, text)?;
            if d == 0.0 {
                return Err(Error::Parse { text: text.into(), reason: "zero denominator".into() });
            }
            return Ok(n / d);
        }
        match t {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            _ => parse_float(t, text),
        }
    }

    fn to_wire(&self) -> WireNum {
        if self.is_finite() {
            WireNum::Float(*self)
        } else if *self > 0.0 {
            WireNum::Text("inf".into())
        } else {
            WireNum::Text("-inf".into())
        }
    }

    fn floor(&self) -> Self {
        f64::floor(*self)
    }

    fn near(&self, other: &Self) -> bool {
        if self == other {
            return true;
        }
        let scale = 1.0f64.max(self.abs()).max(other.abs());
        (self - other).abs() <= FLOAT_TOLERANCE * scale
    }
}

fn parse_float(s: &str, whole: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|e: std::num::ParseFloatError| Error::Parse { text: whole.into(), reason: e.to_string() })?;
    if v.is_nan() {
        return Err(Error::Parse { text: whole.into(), reason: "NaN".into() });
    }
    Ok(v)
}

impl Scalar for Rational {
    const MODE: NumericMode = NumericMode::Exact;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(x: f64) -> Result<Self> {
        Rational::from_float(x)
            .ok_or_else(|| Error::Parse { text: x.to_string(), reason: "not a finite number".into() })
    }

    fn to_f64(&self) -> f64 {
        if let Some(v) = ToPrimitive::to_f64(self) {
            if v.is_finite() {
                return v;
            }
        }
        // very large numerator/denominator: scale through the bit lengths
        let n = self.numer();
        let d = self.denom();
        let shift = n.bits() as i64 - d.bits() as i64;
        let (n2, d2) = if shift > 0 { (n.clone(), d << shift as usize) } else { (n << (-shift) as usize, d.clone()) };
        let base = ToPrimitive::to_f64(&Rational::new(n2, d2)).unwrap_or(f64::NAN);
        base * 2f64.powi(shift as i32)
    }

    fn parse_num(text: &str) -> Result<Self> {
        parse_rational(text)
    }

    fn to_wire(&self) -> WireNum {
        WireNum::Text(self.to_string())
    }

    fn floor(&self) -> Self {
        Rational::floor(self)
    }

    fn near(&self, other: &Self) -> bool {
        self == other
    }

    fn ln(&self) -> f64 {
        // ln(n/d) without overflowing when either part exceeds the f64 range
        let n = self.numer();
        let d = self.denom();
        if n.is_positive() {
            big_ln(n) - big_ln(d)
        } else if n.is_zero() {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        }
    }

    fn log2(&self) -> f64 {
        self.ln() / std::f64::consts::LN_2
    }
}

fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return ToPrimitive::to_f64(x).unwrap_or(f64::NAN).ln();
    }
    let shift = bits - 64;
    let top = ToPrimitive::to_f64(&(x >> shift as usize)).unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let err = |reason: &str| Error::Parse { text: text.into(), reason: reason.into() };
    if t.is_empty() {
        return Err(err("empty"));
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = parse_decimal(n.trim()).ok_or_else(|| err("bad numerator"))?;
        let d = parse_decimal(d.trim()).ok_or_else(|| err("bad denominator"))?;
        if d.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(n / d);
    }
    parse_decimal(t).ok_or_else(|| err("expected p/q, an integer or a decimal"))
}

fn parse_decimal(t: &str) -> Option<Rational> {
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all = format!("{int_part}{frac_part}");
    let mut num = BigInt::from_str(if all.is_empty() { "0" } else { &all }).ok()?;
    if neg {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        Rational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

/// Shorthand for building exact values in code and tests.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::from_ratio(num, den)
}
