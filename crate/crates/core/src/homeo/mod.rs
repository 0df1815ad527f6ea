//! Orientation-preserving homeomorphisms of ℝ.
//!
//! Piecewise-affine maps with rational data are closed under composition and
//! inversion and every question about them (fixed points, crossings, order)
//! is answered exactly. Smooth maps compose lazily.

mod interval;
mod pl;
mod smooth;

use std::fmt;

use serde::Serialize;

pub use interval::Interval;
pub use pl::{Affine, PlMap};
pub use smooth::SmoothMap;

use crate::error::{Error, Result};
use crate::rational::{format_q, from_f64, Q};

/// Root refinement and numeric inversion stop at this width.
pub const ROOT_TOL: f64 = 1e-12;

/// Default grid density, in points per unit length.
pub const DEFAULT_GRID: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum LineMap {
    Pl(PlMap),
    Smooth(SmoothMap),
    /// `Composite([f, g, h]) = f ∘ g ∘ h`.
    Composite(Vec<LineMap>),
    /// Evaluated by monotone bisection.
    Inverse(Box<LineMap>),
}

impl From<PlMap> for LineMap {
    fn from(m: PlMap) -> Self {
        LineMap::Pl(m)
    }
}

impl From<SmoothMap> for LineMap {
    fn from(m: SmoothMap) -> Self {
        LineMap::Smooth(m)
    }
}

/// A value that is exact when it can be.
#[derive(Clone, Debug, PartialEq)]
pub enum Real {
    Exact(Q),
    Approx(f64),
}

impl Real {
    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(q) => crate::rational::to_f64(q),
            Real::Approx(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(q) => write!(f, "{}", format_q(q)),
            Real::Approx(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Real::Exact(q) => s.serialize_str(&format_q(q)),
            Real::Approx(x) => s.serialize_f64(*x),
        }
    }
}

impl LineMap {
    pub fn identity() -> Self {
        LineMap::Pl(PlMap::identity())
    }

    pub fn as_pl(&self) -> Option<&PlMap> {
        match self {
            LineMap::Pl(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.as_pl().is_some()
    }

    pub fn eval_q(&self, x: &Q) -> Option<Q> {
        self.as_pl().map(|p| p.eval(x))
    }

    pub fn eval_real(&self, x: &Real) -> Real {
        match (self, x) {
            (LineMap::Pl(p), Real::Exact(q)) => Real::Exact(p.eval(q)),
            _ => Real::Approx(self.eval(x.to_f64())),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            LineMap::Pl(p) => p.eval_f64(x),
            LineMap::Smooth(s) => s.eval(x),
            LineMap::Composite(parts) => parts.iter().rev().fold(x, |acc, m| m.eval(acc)),
            LineMap::Inverse(inner) => invert_by_bisection(inner, x),
        }
    }

    /// Derivative; for piecewise-affine maps the slope of the piece to the right of `x`.
    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            LineMap::Pl(p) => p.slope_f64(x),
            LineMap::Smooth(s) => s.deriv(x),
            LineMap::Composite(parts) => {
                let mut y = x;
                let mut d = 1.0;
                for m in parts.iter().rev() {
                    d *= m.deriv(y);
                    y = m.eval(y);
                }
                d
            }
            LineMap::Inverse(inner) => 1.0 / inner.deriv(invert_by_bisection(inner, x)),
        }
    }

    /// `self ∘ inner`; exact when both sides are piecewise-affine.
    pub fn compose(&self, inner: &LineMap) -> LineMap {
        match (self, inner) {
            (LineMap::Pl(f), LineMap::Pl(g)) => LineMap::Pl(f.compose(g)),
            _ => {
                let mut parts = Vec::new();
                for m in [self, inner] {
                    match m {
                        LineMap::Composite(ps) => parts.extend(ps.iter().cloned()),
                        LineMap::Pl(p) if p.is_identity() => {}
                        other => parts.push(other.clone()),
                    }
                }
                match parts.len() {
                    0 => LineMap::identity(),
                    1 => parts.pop().unwrap(),
                    _ => LineMap::Composite(parts),
                }
            }
        }
    }

    pub fn inverse(&self) -> LineMap {
        match self {
            LineMap::Pl(p) => LineMap::Pl(p.inverse()),
            LineMap::Smooth(SmoothMap::Affine { a, b }) => {
                LineMap::Smooth(SmoothMap::Affine { a: 1.0 / a, b: -b / a })
            }
            LineMap::Smooth(_) => LineMap::Inverse(Box::new(self.clone())),
            LineMap::Composite(parts) => LineMap::Composite(parts.iter().rev().map(LineMap::inverse).collect()),
            LineMap::Inverse(inner) => (**inner).clone(),
        }
    }

    pub fn pow(&self, n: i64) -> LineMap {
        if let LineMap::Pl(p) = self {
            return LineMap::Pl(p.pow(n));
        }
        let base = if n < 0 { self.inverse() } else { self.clone() };
        (0..n.unsigned_abs()).fold(LineMap::identity(), |acc, _| base.compose(&acc))
    }

    pub fn is_identity(&self) -> bool {
        match self {
            LineMap::Pl(p) => p.is_identity(),
            LineMap::Smooth(SmoothMap::Affine { a, b }) => *a == 1.0 && *b == 0.0,
            LineMap::Smooth(SmoothMap::SineTranslation { c, eps }) => *c == 0.0 && *eps == 0.0,
            _ => false,
        }
    }

    /// `c⁻¹ ∘ self ∘ c`.
    pub fn conjugate(&self, c: &LineMap) -> LineMap {
        c.inverse().compose(&self.compose(c))
    }
}

impl fmt::Display for LineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineMap::Pl(p) => write!(f, "{p}"),
            LineMap::Smooth(s) => write!(f, "{s}"),
            LineMap::Composite(parts) => {
                let names: Vec<String> = parts.iter().map(|p| format!("({p})")).collect();
                write!(f, "{}", names.join(" ∘ "))
            }
            LineMap::Inverse(inner) => write!(f, "({inner})⁻¹"),
        }
    }
}

fn invert_by_bisection(f: &LineMap, y: f64) -> f64 {
    if !y.is_finite() {
        return y;
    }
    let mut step = 1.0;
    let mut lo = y - step;
    let mut hi = y + step;
    for _ in 0..2100 {
        if f.eval(lo) <= y {
            break;
        }
        step *= 2.0;
        lo = y - step;
    }
    step = 1.0;
    for _ in 0..2100 {
        if f.eval(hi) >= y {
            break;
        }
        step *= 2.0;
        hi = y + step;
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.eval(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Numeric scanning parameters for maps without an exact path.
#[derive(Clone, Debug)]
pub struct Scan {
    /// Points per unit length.
    pub grid: usize,
    /// Bounded window used wherever a smooth map must be searched.
    pub search: Interval,
    pub tol: f64,
}

impl Default for Scan {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID,
            search: Interval::closed(crate::rational::q(-16), crate::rational::q(16)).expect("nonempty"),
            tol: 1e-9,
        }
    }
}

impl Scan {
    pub fn sample_points(&self) -> Vec<f64> {
        let (lo, hi) = (self.search.lo_f64(), self.search.hi_f64());
        let n = (((hi - lo) * self.grid as f64).ceil() as usize).max(16);
        (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }
}

/// First point where `f` and `g` differ, or `None` when they agree
/// (exactly for piecewise-affine maps, to `scan.tol` on the grid otherwise).
pub fn disagreement(f: &LineMap, g: &LineMap, scan: &Scan) -> Option<Real> {
    if let (LineMap::Pl(a), LineMap::Pl(b)) = (f, g) {
        if a == b {
            return None;
        }
        let mut probes: Vec<Q> = a.breakpoints().iter().chain(b.breakpoints()).cloned().collect();
        probes.sort();
        let (lo, hi) = match (probes.first(), probes.last()) {
            (Some(l), Some(h)) => (l.clone(), h.clone()),
            _ => (crate::rational::q(0), crate::rational::q(0)),
        };
        let extra: Vec<Q> = [0, 1, -1, -2]
            .iter()
            .map(|&k| &lo + crate::rational::q(k))
            .chain([1, 2].iter().map(|&k| &hi + crate::rational::q(k)))
            .collect();
        for x in extra.iter().chain(probes.iter()) {
            if a.eval(x) != b.eval(x) {
                return Some(Real::Exact(x.clone()));
            }
        }
        // distinct normal forms must differ at a breakpoint or in a germ
        unreachable!("distinct piecewise-affine maps agree on all probes");
    }
    scan.sample_points()
        .into_iter()
        .find(|&x| (f.eval(x) - g.eval(x)).abs() > scan.tol)
        .map(Real::Approx)
}

/// How many fixed points a map has.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FixedCount {
    Zero,
    One,
    AtLeastTwo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoints {
    pub points: Vec<Real>,
    /// Maximal intervals fixed pointwise; each one alone forces `AtLeastTwo`.
    pub intervals: Vec<Interval>,
    pub exact: bool,
}

impl FixedPoints {
    pub fn count(&self) -> FixedCount {
        match (self.points.len(), self.intervals.is_empty()) {
            (0, true) => FixedCount::Zero,
            (1, true) => FixedCount::One,
            _ => FixedCount::AtLeastTwo,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.intervals.is_empty()
    }

    /// Textual witnesses: points, then intervals.
    pub fn describe(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| p.to_string())
            .chain(self.intervals.iter().map(|i| i.to_string()))
            .collect()
    }

    /// Every fixed point (and fixed interval) lies in `[lo, hi]`.
    pub fn all_within(&self, lo: &Q, hi: &Q) -> bool {
        let pts_ok = self.points.iter().all(|p| match p {
            Real::Exact(x) => lo <= x && x <= hi,
            Real::Approx(x) => {
                crate::rational::to_f64(lo) <= *x && *x <= crate::rational::to_f64(hi)
            }
        });
        let ivs_ok = self.intervals.iter().all(|iv| match (&iv.lo, &iv.hi) {
            (Some(a), Some(b)) => lo <= a && b <= hi,
            _ => false,
        });
        pts_ok && ivs_ok
    }
}

/// Fixed points of `f`. Piecewise-affine maps are searched on the whole line
/// exactly; other maps need a bounded `search` interval and are scanned on a
/// grid of `grid` points per unit length with bisection refinement.
pub fn fixed_points(f: &LineMap, search: &Interval, grid: usize) -> Result<FixedPoints> {
    if let LineMap::Pl(p) = f {
        let (pts, ivs) = p.fixed_points();
        return Ok(FixedPoints { points: pts.into_iter().map(Real::Exact).collect(), intervals: ivs, exact: true });
    }
    if !search.is_bounded() {
        return Err(Error::UnboundedSearch);
    }
    let (points, intervals) = grid_roots(|x| f.eval(x) - x, search.lo_f64(), search.hi_f64(), grid)?;
    Ok(FixedPoints { points: points.into_iter().map(Real::Approx).collect(), intervals, exact: false })
}

/// Sign-change scan of `d` on `[lo, hi]` followed by bisection to [`ROOT_TOL`].
/// Runs of exact zeros on consecutive grid points are reported as intervals.
pub fn grid_roots(
    d: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    grid: usize,
) -> Result<(Vec<f64>, Vec<Interval>)> {
    let n = (((hi - lo) * grid as f64).ceil() as usize).max(16);
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| d(x)).collect();
    let mut roots = Vec::new();
    let mut intervals = Vec::new();
    let mut i = 0;
    while i <= n {
        if vals[i] == 0.0 {
            let start = i;
            while i < n && vals[i + 1] == 0.0 {
                i += 1;
            }
            if i > start {
                intervals.push(Interval::closed(from_f64(xs[start])?, from_f64(xs[i])?)?);
            } else {
                roots.push(xs[i]);
            }
            i += 1;
            continue;
        }
        if i < n && vals[i + 1] != 0.0 && (vals[i] < 0.0) != (vals[i + 1] < 0.0) {
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            let neg_left = vals[i] < 0.0;
            while b - a > ROOT_TOL {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if (d(m) < 0.0) == neg_left {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        i += 1;
    }
    Ok((roots, intervals))
}

/// Outcome of counting intersections of two graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Crossings {
    Equal,
    Count(usize),
}

/// Number of solutions of `f(x) = g(x)`, saturating at `cap`.
///
/// Exact for piecewise-affine pairs, where it equals the fixed-point count of
/// `g ∘ f⁻¹`. Otherwise `search` must be bounded.
pub fn crossing_count(
    f: &LineMap,
    g: &LineMap,
    cap: usize,
    search: &Interval,
    grid: usize,
) -> Result<Crossings> {
    if let (LineMap::Pl(a), LineMap::Pl(b)) = (f, g) {
        if a == b {
            return Ok(Crossings::Equal);
        }
        let (pts, ivs) = b.compose(&a.inverse()).fixed_points();
        let n = if ivs.is_empty() { pts.len() } else { cap };
        return Ok(Crossings::Count(n.min(cap)));
    }
    if f == g {
        return Ok(Crossings::Equal);
    }
    if !search.is_bounded() {
        return Err(Error::UnboundedSearch);
    }
    let (pts, ivs) = grid_roots(|x| f.eval(x) - g.eval(x), search.lo_f64(), search.hi_f64(), grid)?;
    let n = if ivs.is_empty() { pts.len() } else { cap };
    Ok(Crossings::Count(n.min(cap)))
}
