//! Piecewise-affine homeomorphisms of the line with rational data.

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::interval::Interval;
use crate::error::{Error, Result};
use crate::rational::{format_q, q, to_f64, Q};

/// `x ↦ slope·x + intercept`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Affine {
    pub slope: Q,
    pub intercept: Q,
}

impl Affine {
    pub fn new(slope: Q, intercept: Q) -> Self {
        Self { slope, intercept }
    }

    pub fn identity() -> Self {
        Self::new(Q::one(), Q::zero())
    }

    pub fn apply(&self, x: &Q) -> Q {
        &self.slope * x + &self.intercept
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &Affine) -> Affine {
        Affine::new(&self.slope * &inner.slope, &self.slope * &inner.intercept + &self.intercept)
    }

    pub fn inverse(&self) -> Affine {
        Affine::new(self.slope.recip(), -&self.intercept / &self.slope)
    }

    pub fn is_identity(&self) -> bool {
        self.slope.is_one() && self.intercept.is_zero()
    }

    pub fn pow(&self, n: i64) -> Affine {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = Affine::identity();
        let mut sq = base;
        let mut k = n.unsigned_abs();
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.after(&sq);
            }
            sq = sq.after(&sq);
            k >>= 1;
        }
        acc
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.slope.is_one() { "x".to_string() } else { format!("({})x", format_q(&self.slope)) };
        if self.intercept.is_zero() {
            write!(f, "{s}")
        } else if self.intercept.is_negative() {
            write!(f, "{s} - {}", format_q(&-&self.intercept))
        } else {
            write!(f, "{s} + {}", format_q(&self.intercept))
        }
    }
}

/// A continuous, strictly increasing, piecewise-affine bijection of ℝ.
///
/// Stored in normal form: `pieces[i]` is valid on `[breakpoints[i-1], breakpoints[i]]`,
/// adjacent pieces are distinct, so two maps are equal iff their normal forms are.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlMap {
    breakpoints: Vec<Q>,
    pieces: Vec<Affine>,
}

impl PlMap {
    /// Builds a map from breakpoints, one slope per piece, and one point on the graph.
    pub fn new(breakpoints: Vec<Q>, slopes: Vec<Q>, anchor: (Q, Q)) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        if let Some(s) = slopes.iter().find(|s| !s.is_positive()) {
            return Err(Error::InvalidInput(format!("slope {} is not positive", format_q(s))));
        }
        let (x0, y0) = anchor;
        let k = breakpoints.partition_point(|b| *b < x0);
        let mut pieces = vec![Affine::identity(); slopes.len()];
        pieces[k] = Affine::new(slopes[k].clone(), &y0 - &slopes[k] * &x0);
        for i in k + 1..slopes.len() {
            let b = &breakpoints[i - 1];
            let v = pieces[i - 1].apply(b);
            pieces[i] = Affine::new(slopes[i].clone(), v - &slopes[i] * b);
        }
        for i in (0..k).rev() {
            let b = &breakpoints[i];
            let v = pieces[i + 1].apply(b);
            pieces[i] = Affine::new(slopes[i].clone(), v - &slopes[i] * b);
        }
        Ok(Self::normalized(breakpoints, pieces))
    }

    pub fn affine(slope: Q, intercept: Q) -> Result<Self> {
        if !slope.is_positive() {
            return Err(Error::InvalidInput(format!("affine slope {} is not positive", format_q(&slope))));
        }
        Ok(Self { breakpoints: vec![], pieces: vec![Affine::new(slope, intercept)] })
    }

    pub fn identity() -> Self {
        Self { breakpoints: vec![], pieces: vec![Affine::identity()] }
    }

    pub fn translation(t: Q) -> Self {
        Self { breakpoints: vec![], pieces: vec![Affine::new(Q::one(), t)] }
    }

    /// Interpolates strictly increasing knots `(x, y)`, continuing with the given end slopes.
    pub fn from_knots(knots: &[(Q, Q)], left_slope: Q, right_slope: Q) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidInput("at least one knot required".into()));
        }
        if !left_slope.is_positive() || !right_slope.is_positive() {
            return Err(Error::InvalidInput("end slopes must be positive".into()));
        }
        for w in knots.windows(2) {
            if w[0].0 >= w[1].0 || w[0].1 >= w[1].1 {
                return Err(Error::InvalidInput(format!(
                    "knots not strictly increasing near x = {}",
                    format_q(&w[0].0)
                )));
            }
        }
        let mut pieces = Vec::with_capacity(knots.len() + 1);
        let (x0, y0) = &knots[0];
        pieces.push(Affine::new(left_slope.clone(), y0 - &left_slope * x0));
        for w in knots.windows(2) {
            let s = (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0);
            let t = &w[0].1 - &s * &w[0].0;
            pieces.push(Affine::new(s, t));
        }
        let (xn, yn) = knots.last().unwrap();
        pieces.push(Affine::new(right_slope.clone(), yn - &right_slope * xn));
        let breakpoints = knots.iter().map(|(x, _)| x.clone()).collect();
        Ok(Self::normalized(breakpoints, pieces))
    }

    fn normalized(breakpoints: Vec<Q>, pieces: Vec<Affine>) -> Self {
        debug_assert_eq!(pieces.len(), breakpoints.len() + 1);
        let mut bps = Vec::with_capacity(breakpoints.len());
        let mut out: Vec<Affine> = Vec::with_capacity(pieces.len());
        let mut pieces = pieces.into_iter();
        out.push(pieces.next().unwrap());
        for (b, p) in breakpoints.into_iter().zip(pieces) {
            if *out.last().unwrap() != p {
                bps.push(b);
                out.push(p);
            }
        }
        Self { breakpoints: bps, pieces: out }
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Affine] {
        &self.pieces
    }

    pub fn slopes(&self) -> Vec<Q> {
        self.pieces.iter().map(|p| p.slope.clone()).collect()
    }

    /// Affine form for all sufficiently large x.
    pub fn right_germ(&self) -> &Affine {
        self.pieces.last().unwrap()
    }

    /// Affine form for all sufficiently negative x.
    pub fn left_germ(&self) -> &Affine {
        &self.pieces[0]
    }

    pub fn is_affine(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.is_affine() && self.pieces[0].is_identity()
    }

    pub fn piece_index(&self, x: &Q) -> usize {
        self.breakpoints.partition_point(|b| b < x)
    }

    pub fn piece_at(&self, x: &Q) -> &Affine {
        &self.pieces[self.piece_index(x)]
    }

    /// Closed domain of piece `i`; `None` marks an infinite end.
    pub fn piece_domain(&self, i: usize) -> (Option<&Q>, Option<&Q>) {
        let lo = if i == 0 { None } else { Some(&self.breakpoints[i - 1]) };
        (lo, self.breakpoints.get(i))
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.piece_at(x).apply(x)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let i = self.breakpoints.partition_point(|b| to_f64(b) < x);
        let p = &self.pieces[i];
        to_f64(&p.slope) * x + to_f64(&p.intercept)
    }

    pub fn slope_f64(&self, x: f64) -> f64 {
        let i = self.breakpoints.partition_point(|b| to_f64(b) <= x);
        to_f64(&self.pieces[i].slope)
    }

    /// Exact preimage of `y`.
    pub fn preimage(&self, y: &Q) -> Q {
        let (mut lo, mut hi) = (0, self.breakpoints.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.pieces[mid].apply(&self.breakpoints[mid]) < *y {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let p = &self.pieces[lo];
        (y - &p.intercept) / &p.slope
    }

    /// `self ∘ inner`, exact and normalized.
    pub fn compose(&self, inner: &PlMap) -> PlMap {
        if self.is_affine() && inner.is_affine() {
            return PlMap { breakpoints: vec![], pieces: vec![self.pieces[0].after(&inner.pieces[0])] };
        }
        let mut cuts: Vec<Q> = inner.breakpoints.clone();
        cuts.extend(self.breakpoints.iter().map(|b| inner.preimage(b)));
        cuts.sort();
        cuts.dedup();
        let samples = sample_points(&cuts);
        let pieces = samples
            .iter()
            .map(|s| {
                let a = inner.piece_at(s);
                self.piece_at(&a.apply(s)).after(a)
            })
            .collect();
        Self::normalized(cuts, pieces)
    }

    pub fn inverse(&self) -> PlMap {
        let breakpoints = self.breakpoints.iter().map(|b| self.eval(b)).collect();
        let pieces = self.pieces.iter().map(Affine::inverse).collect();
        PlMap { breakpoints, pieces }
    }

    pub fn pow(&self, n: i64) -> PlMap {
        if self.is_affine() {
            return PlMap { breakpoints: vec![], pieces: vec![self.pieces[0].pow(n)] };
        }
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = PlMap::identity();
        for _ in 0..n.unsigned_abs() {
            acc = base.compose(&acc);
        }
        acc
    }

    /// Exact fixed-point set: isolated points plus maximal intervals fixed pointwise.
    pub fn fixed_points(&self) -> (Vec<Q>, Vec<Interval>) {
        let mut points: Vec<Q> = Vec::new();
        let mut intervals = Vec::new();
        for (i, p) in self.pieces.iter().enumerate() {
            let (lo, hi) = self.piece_domain(i);
            let one_minus = Q::one() - &p.slope;
            if one_minus.is_zero() {
                if p.intercept.is_zero() {
                    intervals.push(Interval {
                        lo: lo.cloned(),
                        hi: hi.cloned(),
                        lo_closed: lo.is_some(),
                        hi_closed: hi.is_some(),
                    });
                }
                continue;
            }
            let x = &p.intercept / one_minus;
            let inside = lo.is_none_or(|l| *l <= x) && hi.is_none_or(|h| x <= *h);
            if inside && points.last() != Some(&x) {
                points.push(x);
            }
        }
        points.retain(|x| !intervals.iter().any(|iv: &Interval| iv.contains(x)));
        (points, intervals)
    }

    /// Breakpoints, slopes and the anchor `(0, f(0))`, i.e. the JSON form.
    pub fn to_parts(&self) -> (Vec<Q>, Vec<Q>, (Q, Q)) {
        let zero = q(0);
        let y0 = self.eval(&zero);
        (self.breakpoints.clone(), self.slopes(), (zero, y0))
    }
}

/// One point strictly inside each of the `cuts.len() + 1` open cells.
fn sample_points(cuts: &[Q]) -> Vec<Q> {
    let one = Q::one();
    let two = q(2);
    if cuts.is_empty() {
        return vec![Q::zero()];
    }
    let mut out = Vec::with_capacity(cuts.len() + 1);
    out.push(&cuts[0] - &one);
    for w in cuts.windows(2) {
        out.push((&w[0] + &w[1]) / &two);
    }
    out.push(cuts.last().unwrap() + &one);
    out
}

impl fmt::Display for PlMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_affine() {
            return write!(f, "x ↦ {}", self.pieces[0]);
        }
        write!(f, "pl[{}", self.pieces[0])?;
        for (b, p) in self.breakpoints.iter().zip(&self.pieces[1..]) {
            write!(f, " |{}| {}", format_q(b), p)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qr;

    fn two_slope(left: Q, right: Q) -> PlMap {
        PlMap::new(vec![q(0)], vec![left, right], (q(0), q(0))).unwrap()
    }

    #[test]
    fn anchor_determines_pieces() {
        let f = PlMap::new(vec![q(0), q(2)], vec![q(1), q(2), qr(1, 2)], (q(1), q(5))).unwrap();
        assert_eq!(f.eval(&q(1)), q(5));
        assert_eq!(f.eval(&q(0)), q(3));
        assert_eq!(f.eval(&q(2)), q(7));
        assert_eq!(f.eval(&q(4)), q(8));
        assert_eq!(f.eval(&q(-3)), q(0));
    }

    #[test]
    fn rejects_bad_data() {
        assert!(PlMap::new(vec![q(0)], vec![q(1)], (q(0), q(0))).is_err());
        assert!(PlMap::new(vec![q(1), q(0)], vec![q(1), q(1), q(1)], (q(0), q(0))).is_err());
        assert!(PlMap::new(vec![q(0)], vec![q(1), q(0)], (q(0), q(0))).is_err());
    }

    #[test]
    fn equal_slopes_merge_into_one_piece() {
        let f = PlMap::new(vec![q(0), q(1)], vec![q(2), q(2), q(2)], (q(0), q(1))).unwrap();
        assert!(f.is_affine());
        assert_eq!(f, PlMap::affine(q(2), q(1)).unwrap());
    }

    #[test]
    fn inverse_of_two_slope_map_swaps_slopes() {
        let f = two_slope(qr(1, 2), q(2));
        assert_eq!(f.inverse(), two_slope(q(2), qr(1, 2)));
        assert!(f.compose(&f.inverse()).is_identity());
        assert!(f.inverse().compose(&f).is_identity());
    }

    #[test]
    fn composition_breakpoints_come_from_inner_and_preimages() {
        let f = PlMap::new(vec![q(3)], vec![q(1), q(2)], (q(0), q(0))).unwrap();
        let g = PlMap::affine(q(2), q(1)).unwrap();
        let h = f.compose(&g);
        // g^{-1}(3) = 1
        assert_eq!(h.breakpoints(), &[q(1)]);
        for x in [-5, 0, 1, 2, 7] {
            assert_eq!(h.eval(&q(x)), f.eval(&g.eval(&q(x))));
        }
    }

    #[test]
    fn preimage_inverts_eval() {
        let f = PlMap::new(vec![q(-1), q(2)], vec![q(3), qr(1, 3), q(1)], (q(0), q(1))).unwrap();
        for x in [-7, -1, 0, 1, 2, 9] {
            assert_eq!(f.preimage(&f.eval(&q(x))), q(x));
        }
    }

    #[test]
    fn fixed_points_per_piece() {
        let b = PlMap::affine(q(2), q(0)).unwrap();
        assert_eq!(b.fixed_points().0, vec![q(0)]);
        let a = PlMap::translation(q(1));
        assert!(a.fixed_points().0.is_empty());
        // identity on [0, 1], slope 2 outside
        let f = PlMap::new(vec![q(0), q(1)], vec![q(2), q(1), q(2)], (q(0), q(0))).unwrap();
        let (pts, ivs) = f.fixed_points();
        assert!(pts.is_empty());
        assert_eq!(ivs.len(), 1);
        assert_eq!(ivs[0].lo, Some(q(0)));
        assert_eq!(ivs[0].hi, Some(q(1)));
    }

    #[test]
    fn affine_power_matches_repeated_composition() {
        let g = Affine::new(q(2), q(1));
        let mut acc = Affine::identity();
        for _ in 0..5 {
            acc = g.after(&acc);
        }
        assert_eq!(g.pow(5), acc);
        assert!(g.pow(-3).after(&g.pow(3)).is_identity());
    }
}
