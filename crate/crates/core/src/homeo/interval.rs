use std::fmt;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_q, to_f64, Q};

/// An interval of the line with rational (or infinite) endpoints.
///
/// `None` stands for −∞ on the left and +∞ on the right.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Option<Q>,
    pub hi: Option<Q>,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: Q, hi: Q) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidInput(format!(
                "interval needs lo < hi, got [{}, {}]",
                format_q(&lo),
                format_q(&hi)
            )));
        }
        Ok(Self { lo: Some(lo), hi: Some(hi), lo_closed: true, hi_closed: true })
    }

    pub fn whole() -> Self {
        Self { lo: None, hi: None, lo_closed: false, hi_closed: false }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    pub fn length(&self) -> Option<Q> {
        match (&self.lo, &self.hi) {
            (Some(lo), Some(hi)) => Some(hi - lo),
            _ => None,
        }
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.as_ref().map_or(f64::NEG_INFINITY, to_f64)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.as_ref().map_or(f64::INFINITY, to_f64)
    }

    pub fn contains(&self, x: &Q) -> bool {
        let above = match &self.lo {
            None => true,
            Some(lo) => x > lo || (self.lo_closed && x == lo),
        };
        let below = match &self.hi {
            None => true,
            Some(hi) => x < hi || (self.hi_closed && x == hi),
        };
        above && below
    }

    /// Closed intervals `[a, b]` and `[c, d]` meet.
    pub fn meets_closed(&self, other: &Interval) -> bool {
        let left_ok = match (&self.lo, &other.hi) {
            (Some(a), Some(d)) => a <= d,
            _ => true,
        };
        let right_ok = match (&other.lo, &self.hi) {
            (Some(c), Some(b)) => c <= b,
            _ => true,
        };
        left_ok && right_ok
    }

    /// Midpoint-preserving dilation of a bounded interval by `factor`.
    pub fn dilate(&self, factor: &Q) -> Result<Self> {
        let (lo, hi) = match (&self.lo, &self.hi) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(Error::InvalidInput("cannot dilate an unbounded interval".into())),
        };
        if !factor.is_positive() {
            return Err(Error::InvalidInput("dilation factor must be positive".into()));
        }
        let mid = (lo + hi) / Q::from_integer(2.into());
        let half = (hi - lo) * factor / Q::from_integer(2.into());
        Self::closed(&mid - &half, mid + half)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        let lo = self.lo.as_ref().map_or("-inf".to_string(), format_q);
        let hi = self.hi.as_ref().map_or("inf".to_string(), format_q);
        write!(f, "{l}{lo}, {hi}{r}")
    }
}

/// JSON form: `["p/q" | null, "p/q" | null]`, closed at finite ends.
impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let lo = self.lo.as_ref().map(format_q);
        let hi = self.hi.as_ref().map(format_q);
        (lo, hi).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let (lo, hi) = <(Option<String>, Option<String>)>::deserialize(d)?;
        let parse = |s: Option<String>| -> std::result::Result<Option<Q>, D::Error> {
            s.map(|s| crate::rational::parse_q(&s).map_err(D::Error::custom)).transpose()
        };
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if let (Some(a), Some(b)) = (&lo, &hi) {
            if a >= b {
                return Err(D::Error::custom("interval needs lo < hi"));
            }
        }
        Ok(Interval { lo_closed: lo.is_some(), hi_closed: hi.is_some(), lo, hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};

    #[test]
    fn rejects_empty_intervals() {
        assert!(Interval::closed(q(1), q(1)).is_err());
        assert!(Interval::closed(q(2), q(1)).is_err());
    }

    #[test]
    fn membership_respects_closure_flags() {
        let i = Interval { lo: Some(q(0)), hi: Some(q(1)), lo_closed: true, hi_closed: false };
        assert!(i.contains(&q(0)));
        assert!(!i.contains(&q(1)));
        assert!(Interval::whole().contains(&q(-1000)));
    }

    #[test]
    fn dilation_keeps_midpoint() {
        let i = Interval::closed(qr(1, 4), qr(1, 2)).unwrap();
        let l = i.dilate(&q(2)).unwrap();
        assert_eq!(l.lo, Some(qr(1, 8)));
        assert_eq!(l.hi, Some(qr(5, 8)));
    }
}
