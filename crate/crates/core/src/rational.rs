//! Exact rationals and their textual form.
//!
//! Rationals travel through JSON as `"p/q"` strings (or bare integers).
//! Plain decimal strings such as `"0.25"` are also accepted and converted
//! exactly.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"`, `"-7"`, or a finite decimal like `"-1.25e-3"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("not a rational: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
        }
        return Ok(Q::new(n, d));
    }
    if let Ok(n) = BigInt::from_str(s) {
        return Ok(Q::from_integer(n));
    }
    parse_decimal(s).ok_or_else(bad)
}

fn parse_decimal(s: &str) -> Option<Q> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut v = Q::from_integer(n);
    if scale >= 0 {
        v *= Q::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        v /= Q::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -v } else { v })
}

pub fn format_q(v: &Q) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or_else(|| {
        if v.is_positive() {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    })
}

/// Exact conversion; every finite double is a dyadic rational.
pub fn from_f64(x: f64) -> Result<Q> {
    Q::from_float(x).ok_or_else(|| Error::InvalidInput(format!("non-finite value {x}")))
}

/// Number of bits in numerator plus denominator; used to decide when exact
/// iteration has become too expensive.
pub fn bit_size(v: &Q) -> u64 {
    v.numer().bits() + v.denom().bits()
}

pub fn floor(v: &Q) -> Q {
    v.floor()
}

pub fn frac(v: &Q) -> Q {
    v - v.floor()
}

pub mod serde_q {
    //! `serde(with = ...)` helpers for `"p/q"` strings.
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(i64),
        Float(f64),
    }

    fn to_q<'de, D: Deserializer<'de>>(raw: Raw) -> std::result::Result<Q, D::Error> {
        match raw {
            Raw::Text(s) => parse_q(&s).map_err(de::Error::custom),
            Raw::Int(i) => Ok(q(i)),
            Raw::Float(x) => from_f64(x).map_err(de::Error::custom),
        }
    }

    pub fn serialize<S: Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_q(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Q, D::Error> {
        to_q::<D>(Raw::deserialize(d)?)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&format_q(x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
            Vec::<Raw>::deserialize(d)?.into_iter().map(to_q::<D>).collect()
        }
    }

    pub mod pair {
        use super::*;
        use serde::ser::SerializeTuple;

        pub fn serialize<S: Serializer>(v: &(Q, Q), s: S) -> std::result::Result<S::Ok, S::Error> {
            let mut t = s.serialize_tuple(2)?;
            t.serialize_element(&format_q(&v.0))?;
            t.serialize_element(&format_q(&v.1))?;
            t.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<(Q, Q), D::Error> {
            let (a, b) = <(Raw, Raw)>::deserialize(d)?;
            Ok((to_q::<D>(a)?, to_q::<D>(b)?))
        }
    }

    pub mod pairs {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[(Q, Q)], s: S) -> std::result::Result<S::Ok, S::Error> {
            let strs: Vec<[String; 2]> = v.iter().map(|(a, b)| [format_q(a), format_q(b)]).collect();
            serde::Serialize::serialize(&strs, s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<(Q, Q)>, D::Error> {
            Vec::<(Raw, Raw)>::deserialize(d)?
                .into_iter()
                .map(|(a, b)| Ok((to_q::<D>(a)?, to_q::<D>(b)?)))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_q("3/6").unwrap(), qr(1, 2));
        assert_eq!(parse_q("-7").unwrap(), q(-7));
        assert_eq!(parse_q("0.25").unwrap(), qr(1, 4));
        assert_eq!(parse_q("-1.5e-1").unwrap(), qr(-3, 20));
        assert_eq!(parse_q("2e3").unwrap(), q(2000));
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("abc").is_err());
        assert!(parse_q(".").is_err());
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_q(&qr(4, -6)), "-2/3");
        assert_eq!(format_q(&q(5)), "5");
    }
}
