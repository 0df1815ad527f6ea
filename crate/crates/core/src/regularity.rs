//! Distortion estimates for C² maps, the interval-extension lemma, and
//! wandering-interval certificates.

use serde::Serialize;

use crate::action::Action;
use crate::error::{Error, Result};
use crate::homeo::{disagreement, Interval, LineMap, PlMap, Real, Scan, SmoothMap};
use crate::measure::{theta_fiber_scan, FiberScan, Measure};
use crate::rational::{from_f64, to_f64, Q};
use crate::word::Word;

/// Margins may dip this far below zero before a check counts as failed.
pub const MARGIN_TOL: f64 = 1e-9;

fn bounds(j: &Interval) -> Result<(f64, f64)> {
    if !j.is_bounded() {
        return Err(Error::UnboundedSearch);
    }
    Ok((j.lo_f64(), j.hi_f64()))
}

fn grid_in(lo: f64, hi: f64, grid: usize) -> impl Iterator<Item = f64> {
    let n = grid.max(2);
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn log_ratio(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// `sup_{x,y∈J} log(Df(x)/Df(y))`: exact over pieces for piecewise-affine
/// maps, grid plus critical points otherwise.
pub fn distortion(f: &LineMap, j: &Interval, grid: usize) -> Result<f64> {
    let (lo, hi) = bounds(j)?;
    match f {
        LineMap::Pl(p) => Ok(pl_distortion(p, j)),
        LineMap::Smooth(s) => {
            let pts = grid_in(lo, hi, grid).chain(s.deriv_critical_points(lo, hi));
            Ok(log_ratio(pts.map(|x| s.deriv(x).ln())))
        }
        _ => Ok(log_ratio(grid_in(lo, hi, grid).map(|x| f.deriv(x).ln()))),
    }
}

fn pl_distortion(p: &PlMap, j: &Interval) -> f64 {
    let (lo, hi) = (j.lo.as_ref().unwrap(), j.hi.as_ref().unwrap());
    let first = p.piece_index(lo);
    // a piece starting exactly at hi does not meet the interior
    let last = p.piece_index(hi);
    log_ratio((first..=last).map(|i| to_f64(&p.pieces()[i].slope).ln()))
}

/// Lipschitz constant of `log Df`; the domain does not matter for the
/// supported kinds.
pub fn log_deriv_lipschitz(f: &SmoothMap, _domain: &Interval) -> f64 {
    f.log_deriv_lipschitz()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionReport {
    pub j: [f64; 2],
    pub n: usize,
    pub distortion: f64,
    pub c: f64,
    pub orbit_sum: f64,
    pub bound: f64,
    pub margin: f64,
    /// `Σ_{i<n} Dist(f, fⁱ(J))`, the chain-rule upper bound.
    pub chain_sum: f64,
}

impl DistortionReport {
    pub fn passed(&self) -> bool {
        self.margin >= -MARGIN_TOL && self.distortion <= self.chain_sum + MARGIN_TOL
    }
}

/// `C` for the map, or an error when none is certified along the orbit.
fn lipschitz_along(f: &LineMap, j: &Interval, n: usize) -> Result<f64> {
    match f {
        LineMap::Smooth(s) => Ok(s.log_deriv_lipschitz()),
        LineMap::Pl(p) if p.is_affine() => Ok(0.0),
        LineMap::Pl(p) => {
            // constant slope on each orbit interval: C = 0 applies
            let (mut lo, mut hi) = (j.lo.clone().unwrap(), j.hi.clone().unwrap());
            for i in 0..n {
                if p.piece_index(&lo) != p.piece_index(&hi) && !p.breakpoints().contains(&hi) {
                    return Err(Error::UncertifiedOrbit(format!("f^{i}(J) meets a breakpoint")));
                }
                lo = p.eval(&lo);
                hi = p.eval(&hi);
            }
            Ok(0.0)
        }
        _ => Err(Error::Unsupported("no Lipschitz constant for composite maps".into())),
    }
}

/// Both sides of `Dist(fⁿ, J) ≤ C·Σ_{i<n} |fⁱ(J)|` for `n = 1..=n_max`.
pub fn distortion_sum_check(f: &LineMap, j: &Interval, n_max: usize, grid: usize) -> Result<Vec<DistortionReport>> {
    let (lo, hi) = bounds(j)?;
    let c = lipschitz_along(f, j, n_max)?;
    let mut xs: Vec<f64> = grid_in(lo, hi, grid).collect();
    if let LineMap::Smooth(s) = f {
        xs.extend(s.deriv_critical_points(lo, hi));
    }
    // pull the critical points of every later factor back into J
    if let LineMap::Smooth(s) = f {
        let mut image = (lo, hi);
        let mut back = LineMap::identity();
        for _ in 1..n_max {
            back = back.compose(&f.inverse());
            image = (f.eval(image.0), f.eval(image.1));
            for y in s.deriv_critical_points(image.0, image.1) {
                xs.push(back.eval(y));
            }
        }
    }
    xs.retain(|x| *x >= lo && *x <= hi);
    let mut orbit = xs.clone();
    let mut log_d = vec![0.0; xs.len()];
    let (mut a, mut b) = (lo, hi);
    let mut orbit_sum = 0.0;
    let mut chain_sum = 0.0;
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        orbit_sum += b - a;
        chain_sum += distortion(f, &interval_f64(a, b)?, grid)?;
        for (x, l) in orbit.iter_mut().zip(log_d.iter_mut()) {
            *l += f.deriv(*x).ln();
            *x = f.eval(*x);
        }
        let dist = log_ratio(log_d.iter().copied());
        let bound = c * orbit_sum;
        out.push(DistortionReport {
            j: [lo, hi],
            n,
            distortion: dist,
            c,
            orbit_sum,
            bound,
            margin: bound - dist,
            chain_sum,
        });
        a = f.eval(a);
        b = f.eval(b);
    }
    Ok(out)
}

fn interval_f64(a: f64, b: f64) -> Result<Interval> {
    Interval::closed(from_f64(a)?, from_f64(b)?)
}

/// Partial sum of `Σ_{i≥0} |gⁱ(I)|` with a certified geometric tail.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitSum {
    pub terms: usize,
    pub partial: f64,
    pub tail_bound: f64,
    /// Largest ratio of consecutive terms over the last ten.
    pub ratio: f64,
}

impl OrbitSum {
    pub fn total(&self) -> f64 {
        self.partial + self.tail_bound
    }
}

pub const TAIL_WINDOW: usize = 10;
pub const TAIL_RATIO: f64 = 0.9;

fn orbit_lengths(g: &LineMap, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut out = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        out.push(b - a);
        a = g.eval(a);
        b = g.eval(b);
    }
    out
}

/// Sums terms `0..=n` and bounds the rest by the geometric series of the
/// worst ratio among the last ten terms, which must not exceed 0.9.
pub fn certified_orbit_sum(lengths: &[f64]) -> Result<OrbitSum> {
    if lengths.len() <= TAIL_WINDOW {
        return Err(Error::BoundExhausted(format!("at least {} terms needed for a tail bound", TAIL_WINDOW + 1)));
    }
    let tail = &lengths[lengths.len() - TAIL_WINDOW - 1..];
    let ratio = tail.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    if !(ratio <= TAIL_RATIO) {
        return Err(Error::BoundExhausted(format!("tail ratio {ratio:.4} exceeds {TAIL_RATIO}")));
    }
    let last = *lengths.last().unwrap();
    Ok(OrbitSum {
        terms: lengths.len(),
        partial: lengths.iter().sum(),
        tail_bound: last * ratio / (1.0 - ratio),
        ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchwartzReport {
    pub c: f64,
    pub delta: f64,
    pub j: [f64; 2],
    pub l: [f64; 2],
    pub j_sum: OrbitSum,
    pub l_sum: OrbitSum,
    /// `max_n |gⁿ(L)| / |gⁿ(J)|`.
    pub max_ratio: f64,
    pub n: usize,
    pub holds: bool,
}

/// `δ = min(|J|, e^{−2C}) / 2`, strictly inside the admissible range.
pub fn default_delta(j_len: f64, c: f64) -> f64 {
    j_len.min((-2.0 * c).exp()) / 2.0
}

/// Extension of `J` to `L ⊃ J` with `|L| < (1+δ)|J|`, then
/// `|gⁿ(L)| ≤ 2|gⁿ(J)|` for `n ≤ n_max` and `Σ|gⁱ(L)| ≤ 2`.
pub fn schwartz_extension_check(
    g: &LineMap,
    j: &Interval,
    delta_override: Option<f64>,
    n_max: usize,
) -> Result<SchwartzReport> {
    let (lo, hi) = bounds(j)?;
    let c = lipschitz_along(g, j, n_max)?;
    let j_lengths = orbit_lengths(g, lo, hi, n_max);
    let j_sum = certified_orbit_sum(&j_lengths)?;
    if j_sum.total() > 1.0 {
        return Err(Error::LemmaHypothesis(format!("Σ|g^i(J)| ≈ {:.6} exceeds 1", j_sum.total())));
    }
    let len = hi - lo;
    let cap = len.min((-2.0 * c).exp());
    let delta = delta_override.unwrap_or_else(|| default_delta(len, c));
    if !(delta > 0.0 && delta < cap) {
        return Err(Error::LemmaHypothesis(format!("δ = {delta} outside (0, {cap})")));
    }
    let pad = 0.99 * delta * len / 2.0;
    let (l_lo, l_hi) = (lo - pad, hi + pad);
    let l_lengths = orbit_lengths(g, l_lo, l_hi, n_max);
    let l_sum = certified_orbit_sum(&l_lengths)?;
    let max_ratio = l_lengths.iter().zip(&j_lengths).map(|(l, j)| l / j).fold(0.0, f64::max);
    let holds = max_ratio <= 2.0 && l_sum.total() <= 2.0;
    Ok(SchwartzReport { c, delta, j: [lo, hi], l: [l_lo, l_hi], j_sum, l_sum, max_ratio, n: n_max, holds })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum WanderingVerdict {
    Wandering { words_checked: usize, word_len: usize, min_separation: f64 },
    Returns { word: String, image: [String; 2] },
}

impl WanderingVerdict {
    pub fn is_wandering(&self) -> bool {
        matches!(self, WanderingVerdict::Wandering { .. })
    }
}

#[derive(Clone, Debug)]
enum Pair {
    Exact(Q, Q),
    Approx(f64, f64),
}

impl Pair {
    fn apply(&self, f: &LineMap) -> Pair {
        match self {
            Pair::Exact(a, b) => match (f.eval_q(a), f.eval_q(b)) {
                (Some(x), Some(y)) => Pair::Exact(x, y),
                _ => Pair::Approx(f.eval(to_f64(a)), f.eval(to_f64(b))),
            },
            Pair::Approx(a, b) => Pair::Approx(f.eval(*a), f.eval(*b)),
        }
    }

    fn strings(&self) -> [String; 2] {
        match self {
            Pair::Exact(a, b) => [Real::Exact(a.clone()).to_string(), Real::Exact(b.clone()).to_string()],
            Pair::Approx(a, b) => [a.to_string(), b.to_string()],
        }
    }
}

/// `w(J) ∩ J = ∅` for every nontrivial element given by a reduced word of
/// length ≤ `word_len`; words are grown by prepending letters, so only
/// endpoint images are computed.
pub fn wandering_check(action: &Action, j: &Interval, word_len: usize) -> Result<WanderingVerdict> {
    wandering_check_in(action, action, j, word_len)
}

/// As [`wandering_check`], with triviality of a word decided in `group`.
///
/// A truncated blow-up is not faithful: a relator of the base group can act
/// nontrivially far from the orbit while fixing `J`. Such words are trivial
/// group elements and are skipped.
pub fn wandering_check_in(action: &Action, group: &Action, j: &Interval, word_len: usize) -> Result<WanderingVerdict> {
    if group.len() != action.len() {
        return Err(Error::InvalidInput("group and action need the same generators".into()));
    }
    let (Some(lo), Some(hi)) = (&j.lo, &j.hi) else {
        return Err(Error::UnboundedSearch);
    };
    let syms: Vec<(usize, i64, LineMap)> = (0..action.len())
        .flat_map(|g| [(g, 1), (g, -1)])
        .map(|(g, s)| (g, s, action.symbol(g, s)))
        .collect();
    let start = if action.is_pl() { Pair::Exact(lo.clone(), hi.clone()) } else { Pair::Approx(j.lo_f64(), j.hi_f64()) };
    let mut stack = vec![(Word::empty(), start)];
    let mut checked = 0usize;
    let mut min_sep = f64::INFINITY;
    while let Some((w, img)) = stack.pop() {
        if w.len() == word_len {
            continue;
        }
        let first = w.letters().first().map(|&(g, e)| (g, e.signum()));
        for (g, s, m) in &syms {
            if first == Some((*g, -*s)) {
                continue;
            }
            let nw = Word::letter(*g, *s).concat(&w);
            let nimg = img.apply(m);
            let (disjoint, sep) = match &nimg {
                Pair::Exact(a, b) => {
                    let sep = if b < lo { lo - b } else if a > hi { a - hi } else { Q::from_integer(0.into()) };
                    (b < lo || a > hi, to_f64(&sep))
                }
                Pair::Approx(a, b) => {
                    let (l, h) = (j.lo_f64(), j.hi_f64());
                    let sep = if *b < l { l - b } else if *a > h { a - h } else { 0.0 };
                    (*b < l || *a > h, sep)
                }
            };
            if !disjoint && !group.realize(&nw).is_identity() {
                return Ok(WanderingVerdict::Returns { word: action.render(&nw), image: nimg.strings() });
            }
            if disjoint {
                checked += 1;
                min_sep = min_sep.min(sep);
            }
            stack.push((nw, nimg));
        }
    }
    Ok(WanderingVerdict::Wandering { words_checked: checked, word_len, min_separation: min_sep })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum WanderingSearch {
    Found { interval: [String; 2], certificate: WanderingVerdict },
    NoneFound { candidates_tried: usize },
}

pub fn wandering_interval_search(action: &Action, word_len: usize, candidates: &[Interval]) -> Result<WanderingSearch> {
    for j in candidates {
        let v = wandering_check(action, j, word_len)?;
        if v.is_wandering() {
            let show = |e: &Option<Q>| e.clone().map_or("inf".to_string(), |v| Real::Exact(v).to_string());
            return Ok(WanderingSearch::Found { interval: [show(&j.lo), show(&j.hi)], certificate: v });
        }
    }
    Ok(WanderingSearch::NoneFound { candidates_tried: candidates.len() })
}

/// Positive-length fibers of a scan as closed candidate intervals.
pub fn fiber_candidates(scan: &FiberScan) -> Result<Vec<Interval>> {
    scan.fibers.iter().map(|f| interval_f64(f[0], f[1])).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContrastColumn {
    pub min_increment: f64,
    pub fibers: usize,
    pub fiber_lengths: Vec<f64>,
    /// Same scan at twice the resolution.
    pub refined_fibers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContrastReport {
    pub window: [f64; 2],
    pub grid: usize,
    pub c2: ContrastColumn,
    pub blowup: ContrastColumn,
    pub holds: bool,
}

fn column(mu: &Measure, lo: f64, hi: f64, grid: usize, tol: f64) -> ContrastColumn {
    let s = theta_fiber_scan(mu, lo, hi, grid, tol);
    let r = theta_fiber_scan(mu, lo, hi, 2 * grid, tol);
    ContrastColumn {
        min_increment: s.min_increment,
        fibers: s.fibers.len(),
        fiber_lengths: s.fibers.iter().map(|f| f[1] - f[0]).collect(),
        refined_fibers: r.fibers.len(),
    }
}

/// θ-injectivity for the C² action against the fibers of the blow-up.
pub fn conjugacy_contrast_report(c2: &Measure, blown: &Measure, window: (f64, f64), grid: usize, tol: f64) -> ContrastReport {
    let a = column(c2, window.0, window.1, grid, tol);
    let b = column(blown, window.0, window.1, grid, tol);
    let holds = a.fibers == 0 && a.refined_fibers == 0 && b.fibers > 0;
    ContrastReport { window: [window.0, window.1], grid, c2: a, blowup: b, holds }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicityReport {
    pub p: String,
    pub q: String,
    pub holds: bool,
    pub witness: Option<Real>,
}

/// `g(y + q) = g(y) + p`, the rational case of the rectified action.
pub fn periodicity_check(g: &LineMap, p: &Q, q: &Q, scan: &Scan) -> PeriodicityReport {
    let tq = LineMap::Pl(PlMap::translation(q.clone()));
    let tp = LineMap::Pl(PlMap::translation(p.clone()));
    let witness = disagreement(&g.compose(&tq), &tp.compose(g), scan);
    PeriodicityReport {
        p: Real::Exact(p.clone()).to_string(),
        q: Real::Exact(q.clone()).to_string(),
        holds: witness.is_none(),
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{affine_action, bs12};
    use crate::rational::{q, qr};
    use std::f64::consts::PI;

    fn iv(a: Q, b: Q) -> Interval {
        Interval::closed(a, b).unwrap()
    }

    fn sine(c: f64, e: f64) -> LineMap {
        SmoothMap::sine_translation(c, e).unwrap().into()
    }

    #[test]
    fn distortion_examples() {
        let a: LineMap = SmoothMap::affine(2.0, 3.0).unwrap().into();
        assert_eq!(distortion(&a, &iv(q(0), q(5)), 64).unwrap(), 0.0);
        let d = distortion(&sine(0.3, 0.1), &iv(q(0), qr(1, 2)), 4096).unwrap();
        let want = ((1.0 + 0.2 * PI) / (1.0 - 0.2 * PI)).ln();
        assert!((d - want).abs() < 1e-12);
        let p: LineMap = PlMap::new(vec![q(0)], vec![q(1), q(2)], (q(0), q(0))).unwrap().into();
        assert!((distortion(&p, &iv(q(-1), q(1)), 8).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(distortion(&p, &iv(q(-1), q(0)), 8).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_examples() {
        let j = iv(q(0), q(1));
        let a = SmoothMap::affine(2.0, 0.0).unwrap();
        assert_eq!(log_deriv_lipschitz(&a, &j), 0.0);
        let s = SmoothMap::sine_translation(0.3, 0.01).unwrap();
        let want = 0.04 * PI * PI / (1.0 - 0.02 * PI);
        assert!((log_deriv_lipschitz(&s, &j) - want).abs() < 1e-15);
        let t = SmoothMap::sine_translation(0.7, 0.01).unwrap();
        assert_eq!(log_deriv_lipschitz(&s, &j), log_deriv_lipschitz(&t, &j));
    }

    #[test]
    fn distortion_sum_margins() {
        let reports = distortion_sum_check(&sine(0.3, 0.1), &iv(q(0), qr(1, 10)), 50, 4096).unwrap();
        assert_eq!(reports.len(), 50);
        assert!(reports.iter().all(|r| r.passed()), "{:?}", reports.iter().find(|r| !r.passed()));
        let first = &reports[0];
        assert!((first.orbit_sum - 0.1).abs() < 1e-15);
        let aff: LineMap = PlMap::affine(q(3), q(1)).unwrap().into();
        let r = distortion_sum_check(&aff, &iv(q(0), q(1)), 5, 64).unwrap();
        assert!(r.iter().all(|r| r.distortion == 0.0 && r.bound == 0.0));
    }

    #[test]
    fn pl_orbit_through_breakpoint_is_refused() {
        let p: LineMap = PlMap::new(vec![q(2)], vec![q(1), q(2)], (q(0), q(1))).unwrap().into();
        assert!(matches!(
            distortion_sum_check(&p, &iv(q(0), qr(1, 2)), 5, 64),
            Err(Error::UncertifiedOrbit(_))
        ));
    }

    #[test]
    fn schwartz_half_map() {
        let g: LineMap = PlMap::affine(qr(1, 2), q(0)).unwrap().into();
        let r = schwartz_extension_check(&g, &iv(qr(1, 4), qr(1, 2)), None, 60).unwrap();
        assert!(r.holds);
        assert_eq!(r.delta, 0.125);
        assert!((r.j_sum.total() - 0.5).abs() < 1e-12);
        assert!(r.max_ratio < 1.0 + r.delta);
        assert!(r.l_sum.total() <= (1.0 + r.delta) / 2.0 + 1e-12);
        assert!(matches!(
            schwartz_extension_check(&g, &iv(qr(1, 4), qr(1, 2)), Some(0.5), 60),
            Err(Error::LemmaHypothesis(_))
        ));
        let big = iv(q(0), q(2));
        assert!(matches!(schwartz_extension_check(&g, &big, None, 60), Err(Error::LemmaHypothesis(_))));
    }

    #[test]
    fn tail_needs_geometric_decay() {
        let slow: Vec<f64> = (1..30).map(|k| 1.0 / (k * k) as f64).collect();
        assert!(matches!(certified_orbit_sum(&slow), Err(Error::BoundExhausted(_))));
        let fast: Vec<f64> = (0..30).map(|k| 0.5f64.powi(k)).collect();
        let s = certified_orbit_sum(&fast).unwrap();
        assert!((s.total() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn wandering_examples() {
        let t = affine_action(&[(q(1), q(1))]).unwrap();
        let found = wandering_interval_search(&t, 5, &[iv(q(0), qr(1, 2))]).unwrap();
        assert!(matches!(found, WanderingSearch::Found { .. }));
        // [0, 2] meets its translate by 1
        match wandering_check(&t, &iv(q(0), q(2)), 3).unwrap() {
            WanderingVerdict::Returns { word, .. } => assert!(word == "a" || word == "a^-1"),
            v => panic!("{v:?}"),
        }
        let none = wandering_interval_search(&bs12(), 4, &[iv(q(0), qr(1, 2)), iv(q(3), q(4))]).unwrap();
        assert_eq!(none, WanderingSearch::NoneFound { candidates_tried: 2 });
    }

    #[test]
    fn relators_do_not_count_as_returns() {
        // b a b^-1 a^-2 is trivial; a tiny interval far out must not be flagged by it
        let v = wandering_check(&bs12(), &iv(q(1000), q(1000) + qr(1, 1 << 20)), 5).unwrap();
        assert!(v.is_wandering(), "{v:?}");
    }

    #[test]
    fn contrast_examples() {
        let leb = Measure::lebesgue();
        let r = conjugacy_contrast_report(&leb, &leb, (-2.0, 2.0), 512, 1e-12);
        assert!(!r.holds);
        assert_eq!((r.c2.fibers, r.blowup.fibers), (0, 0));
    }

    #[test]
    fn periodicity_examples() {
        let scan = Scan::default();
        assert!(periodicity_check(&sine(0.3, 0.1), &q(1), &q(1), &scan).holds);
        let g: LineMap = PlMap::affine(q(2), q(0)).unwrap().into();
        assert!(periodicity_check(&g, &q(2), &q(1), &scan).holds);
        assert!(!periodicity_check(&g, &q(1), &q(1), &scan).holds);
    }
}
