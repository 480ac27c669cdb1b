//! Integrability exponents in `[1, ∞]` with exact rational arithmetic.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational number used by every rule of the condition engine.
pub type Rational = Rational64;

/// Shorthand for the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

/// Rational approximation of a decimal, e.g. for CLI input like `1.5`.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::InvalidParameters(format!("{x} is not finite")));
    }
    Rational::approximate_float(x)
        .ok_or_else(|| Error::InvalidParameters(format!("cannot represent {x} as a rational")))
}

/// Parses `3`, `-1/2`, `0.25` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let num: i64 = num
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameters(format!("bad rational {text:?}")))?;
        let den: i64 = den
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameters(format!("bad rational {text:?}")))?;
        if den == 0 {
            return Err(Error::InvalidParameters(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(num, den));
    }
    if let Ok(i) = t.parse::<i64>() {
        return Ok(Rational::from_integer(i));
    }
    if let Some((int, frac)) = t.split_once('.') {
        // exact decimal: 0.25 -> 25/100
        let digits = frac.len() as u32;
        if digits <= 15 && frac.chars().all(|c| c.is_ascii_digit()) {
            let neg = int.trim_start().starts_with('-');
            let int_part: i64 = if int.is_empty() || int == "-" || int == "+" {
                0
            } else {
                int.parse()
                    .map_err(|_| Error::InvalidParameters(format!("bad number {text:?}")))?
            };
            let frac_part: i64 = if frac.is_empty() { 0 } else { frac.parse().unwrap_or(0) };
            let scale = 10i64.pow(digits);
            let mag = int_part.abs() * scale + frac_part;
            return Ok(Rational::new(if neg { -mag } else { mag }, scale));
        }
    }
    let f: f64 = t
        .parse()
        .map_err(|_| Error::InvalidParameters(format!("bad number {text:?}")))?;
    rational_from_f64(f)
}

/// An exponent `p ∈ [1, ∞]`; `1/∞ = 0` throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtendedExponent {
    Finite(Rational),
    Infinite,
}

pub use ExtendedExponent::Infinite as INF;

impl ExtendedExponent {
    pub fn new(value: Rational) -> Result<Self> {
        if value < Rational::one() {
            return Err(Error::InvalidExponent(value.to_string()));
        }
        Ok(Self::Finite(value))
    }

    pub fn int(value: i64) -> Self {
        Self::new(Rational::from_integer(value)).expect("integer exponent below 1")
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::new(Rational::new(num, den)).expect("rational exponent below 1")
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn two() -> Self {
        Self::int(2)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinite)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Self::Finite(r) if r.is_one())
    }

    /// `1/p`, exact.
    pub fn recip(&self) -> Rational {
        match self {
            Self::Finite(r) => r.recip(),
            Self::Infinite => Rational::zero(),
        }
    }

    /// Builds an exponent from its reciprocal `1/p ∈ [0, 1]`.
    pub fn from_recip(r: Rational) -> Result<Self> {
        if r.is_zero() {
            Ok(Self::Infinite)
        } else if r < Rational::zero() || r > Rational::one() {
            Err(Error::InvalidExponent(format!("1/({r})")))
        } else {
            Ok(Self::Finite(r.recip()))
        }
    }

    /// Conjugate exponent, `1/q + 1/q' = 1`.
    pub fn conjugate(&self) -> Self {
        Self::from_recip(Rational::one() - self.recip()).expect("conjugate of a valid exponent")
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Self::Finite(r) => r.to_f64().unwrap_or(f64::NAN),
            Self::Infinite => f64::INFINITY,
        }
    }

    /// `p / m` for a positive integer `m`, when the result stays `>= 1`.
    pub fn div_int(&self, m: i64) -> Result<Self> {
        match self {
            Self::Infinite => Ok(Self::Infinite),
            Self::Finite(r) => Self::new(*r / Rational::from_integer(m)),
        }
    }
}

impl PartialOrd for ExtendedExponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedExponent {
    fn cmp(&self, other: &Self) -> Ordering {
        // larger exponent <=> smaller reciprocal
        other.recip().cmp(&self.recip())
    }
}

impl fmt::Display for ExtendedExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Infinite => write!(f, "inf"),
            Self::Finite(r) => write!(f, "{r}"),
        }
    }
}

impl FromStr for ExtendedExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(Self::Infinite),
            _ => {}
        }
        let r = parse_rational(t).map_err(|_| Error::ParseExponent(s.to_string()))?;
        Self::new(r)
    }
}

impl Serialize for ExtendedExponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtendedExponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde helper writing a rational as `"num/den"`.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugates() {
        assert_eq!(ExtendedExponent::two().conjugate(), ExtendedExponent::two());
        assert_eq!(ExtendedExponent::one().conjugate(), INF);
        assert_eq!(INF.conjugate(), ExtendedExponent::one());
        assert_eq!(ExtendedExponent::ratio(4, 3).conjugate(), ExtendedExponent::int(4));
    }

    #[test]
    fn parsing() {
        assert_eq!("inf".parse::<ExtendedExponent>().unwrap(), INF);
        assert_eq!("4/3".parse::<ExtendedExponent>().unwrap(), ExtendedExponent::ratio(4, 3));
        assert_eq!("1.5".parse::<ExtendedExponent>().unwrap(), ExtendedExponent::ratio(3, 2));
        assert!("0.5".parse::<ExtendedExponent>().is_err());
        assert!("abc".parse::<ExtendedExponent>().is_err());
        assert_eq!(parse_rational("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(parse_rational("-1/2").unwrap(), rat(-1, 2));
    }

    #[test]
    fn ordering_puts_infinity_last() {
        let mut v = vec![INF, ExtendedExponent::two(), ExtendedExponent::one()];
        v.sort();
        assert_eq!(v, vec![ExtendedExponent::one(), ExtendedExponent::two(), INF]);
    }

    #[test]
    fn serde_round_trip() {
        let e = ExtendedExponent::ratio(4, 3);
        let j = serde_json::to_string(&e).unwrap();
        assert_eq!(j, "\"4/3\"");
        let back: ExtendedExponent = serde_json::from_str(&j).unwrap();
        assert_eq!(back, e);
    }
}
