//! Exact rational coordinates.
//!
//! Times and positions are rationals so that arrival-time equalities such as
//! `(i - 1) * 0.1 + 1 == expected` hold exactly, including for non-dyadic
//! spacings.

use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = Ratio<i128>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ParseRationalError {
    #[error("empty number")]
    Empty,
    #[error("not a finite number: {0}")]
    NotFinite(String),
    #[error("malformed number {0:?}")]
    Malformed(String),
    #[error("number {0:?} exceeds the exact range")]
    Overflow(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Parses `"3"`, `"-0.125"`, `"1.2"` or `"5/7"` exactly.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(ParseRationalError::ZeroDenominator(s.to_string()));
        }
        return Ok(n / d);
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(ParseRationalError::Malformed(s.to_string()));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(ParseRationalError::Malformed(s.to_string()));
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = digits.trim_start_matches('0');
    let numer: i128 = if digits.is_empty() {
        0
    } else {
        digits
            .parse()
            .map_err(|_| ParseRationalError::Overflow(s.to_string()))?
    };
    let denom = 10i128
        .checked_pow(frac_part.len() as u32)
        .ok_or_else(|| ParseRationalError::Overflow(s.to_string()))?;
    let r = Rational::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// Converts through the shortest decimal representation, so `0.1` becomes
/// exactly `1/10` rather than the nearest binary fraction.
pub fn rational_from_f64(v: f64) -> Result<Rational, ParseRationalError> {
    if !v.is_finite() {
        return Err(ParseRationalError::NotFinite(v.to_string()));
    }
    parse_rational(&format!("{v}"))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        (*r.numer() as f64) / (*r.denom() as f64)
    })
}

pub fn rat(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

macro_rules! exact_newtype {
    ($name:ident) => {
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub Rational);

        impl $name {
            pub fn new(v: Rational) -> Self {
                $name(v)
            }

            pub fn from_int(v: i128) -> Self {
                $name(Rational::from_integer(v))
            }

            pub fn parse(s: &str) -> Result<Self, ParseRationalError> {
                parse_rational(s).map($name)
            }

            pub fn from_f64(v: f64) -> Result<Self, ParseRationalError> {
                rational_from_f64(v).map($name)
            }

            pub fn value(&self) -> Rational {
                self.0
            }

            pub fn to_f64(&self) -> f64 {
                to_f64(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.to_f64())
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_f64(self.to_f64())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                ExactRepr::deserialize(d)?
                    .into_rational()
                    .map($name)
                    .map_err(serde::de::Error::custom)
            }
        }
    };
}

exact_newtype!(Position);
exact_newtype!(TimeStamp);

impl Position {
    pub fn distance(&self, other: &Position) -> Rational {
        (self.0 - other.0).abs()
    }
}

impl TimeStamp {
    pub fn plus(&self, d: Rational) -> TimeStamp {
        TimeStamp(self.0 + d)
    }
}

/// Accepts either a JSON/TOML number or a string such as `"1/7"`.
#[derive(Deserialize)]
#[serde(untagged)]
pub enum ExactRepr {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ExactRepr {
    pub fn into_rational(self) -> Result<Rational, ParseRationalError> {
        match self {
            ExactRepr::Int(i) => Ok(Rational::from_integer(i as i128)),
            ExactRepr::Float(f) => rational_from_f64(f),
            ExactRepr::Text(s) => parse_rational(&s),
        }
    }
}

/// Serde helpers for plain `Rational` fields.
pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        ExactRepr::deserialize(d)?
            .into_rational()
            .map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.serialize_some(&r.to_string()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            Option::<ExactRepr>::deserialize(d)?
                .map(|v| v.into_rational().map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}
