//! Closed-form C² diffeomorphisms.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SmoothMap {
    /// `x ↦ a·x + b`, `a > 0`.
    Affine { a: f64, b: f64 },
    /// `x ↦ x + c + eps·sin(2πx)`, `|2π·eps| < 1`.
    SineTranslation { c: f64, eps: f64 },
}

impl SmoothMap {
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidInput(format!("affine map needs finite a > 0, got a = {a}")));
        }
        Ok(SmoothMap::Affine { a, b })
    }

    pub fn sine_translation(c: f64, eps: f64) -> Result<Self> {
        if !(c.is_finite() && eps.is_finite() && (2.0 * PI * eps).abs() < 1.0) {
            return Err(Error::InvalidInput(format!(
                "sine-perturbed translation needs |2π·eps| < 1, got eps = {eps}"
            )));
        }
        Ok(SmoothMap::SineTranslation { c, eps })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SmoothMap::Affine { a, b } => a * x + b,
            SmoothMap::SineTranslation { c, eps } => x + c + eps * (2.0 * PI * x).sin(),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            SmoothMap::Affine { a, .. } => a,
            SmoothMap::SineTranslation { eps, .. } => 1.0 + 2.0 * PI * eps * (2.0 * PI * x).cos(),
        }
    }

    pub fn second_deriv(&self, x: f64) -> f64 {
        match *self {
            SmoothMap::Affine { .. } => 0.0,
            SmoothMap::SineTranslation { eps, .. } => -4.0 * PI * PI * eps * (2.0 * PI * x).sin(),
        }
    }

    /// Global Lipschitz constant of `log Df`.
    pub fn log_deriv_lipschitz(&self) -> f64 {
        match *self {
            SmoothMap::Affine { .. } => 0.0,
            SmoothMap::SineTranslation { eps, .. } => {
                let e = eps.abs();
                4.0 * PI * PI * e / (1.0 - 2.0 * PI * e)
            }
        }
    }

    /// Points where `Df` attains its extremes, restricted to `[lo, hi]`.
    pub fn deriv_critical_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        match *self {
            SmoothMap::Affine { .. } => vec![],
            SmoothMap::SineTranslation { .. } => {
                // cos(2πx) = ±1 at half-integers
                let first = (2.0 * lo).ceil() as i64;
                let last = (2.0 * hi).floor() as i64;
                (first..=last).map(|k| k as f64 / 2.0).collect()
            }
        }
    }

    /// Orientation-preserving maps of the form `x + 1`-periodic perturbation of a translation.
    pub fn commutes_with_unit_translation(&self) -> bool {
        matches!(self, SmoothMap::SineTranslation { .. } | SmoothMap::Affine { a: 1.0, .. })
    }
}

impl fmt::Display for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothMap::Affine { a, b } => write!(f, "x ↦ {a}x + {b}"),
            SmoothMap::SineTranslation { c, eps } => write!(f, "x ↦ x + {c} + {eps}·sin(2πx)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_translation_at_zero_is_the_shift() {
        let f = SmoothMap::sine_translation(0.3, 0.1).unwrap();
        assert_eq!(f.eval(0.0), 0.3);
    }

    #[test]
    fn rejects_non_monotone_perturbation() {
        assert!(SmoothMap::sine_translation(0.0, 0.2).is_err());
        assert!(SmoothMap::affine(-1.0, 0.0).is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let f = SmoothMap::sine_translation(0.3, 0.1).unwrap();
        for &x in &[-0.7, 0.0, 0.13, 0.5, 2.2] {
            let h = 1e-6;
            let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
            assert!((fd - f.deriv(x)).abs() < 1e-8);
            let fd2 = (f.deriv(x + h) - f.deriv(x - h)) / (2.0 * h);
            assert!((fd2 - f.second_deriv(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn lipschitz_constant_dominates_log_derivative_slope() {
        let f = SmoothMap::sine_translation(0.3, 0.1).unwrap();
        let c = f.log_deriv_lipschitz();
        let worst = (0..10_000)
            .map(|i| i as f64 / 10_000.0)
            .map(|x| (f.second_deriv(x) / f.deriv(x)).abs())
            .fold(0.0, f64::max);
        assert!(worst <= c + 1e-12);
    }
}
