//! Circle homeomorphisms through their lifts: rotation numbers, the quotient
//! by a unit translation, Denjoy-style blow-ups of rotations and the global
//! fixed point dichotomy.

use std::fmt;
use std::io::Write;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::action::Action;
use crate::error::{Error, Result};
use crate::homeo::{disagreement, fixed_points, grid_roots, Interval, LineMap, PlMap, Real, Scan, SmoothMap};
use crate::rational::{bit_size, floor, format_q, frac, q, qr, to_f64, Q};
use crate::word::Word;

/// Exact iteration stops once numerators or denominators pass this many bits.
pub const EXACT_BITS: u64 = 256;
const LIFT_TOL: f64 = 1e-9;

/// Degree-one lift given by its knots over one period: `x₀ = 0 < x₁ < … < 1`,
/// extended by `F(x + 1) = F(x) + 1` and linear in between.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PeriodicPlLift {
    knots: Vec<(Q, Q)>,
}

impl PeriodicPlLift {
    /// Any finite set of graph points `(x, F(x))`; they are reduced to one period.
    pub fn from_points(points: Vec<(Q, Q)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("a periodic lift needs at least one knot".into()));
        }
        let mut knots: Vec<(Q, Q)> = points
            .into_iter()
            .map(|(x, y)| {
                let k = floor(&x);
                (&x - &k, y - k)
            })
            .collect();
        knots.sort_by(|a, b| a.0.cmp(&b.0));
        knots.dedup_by(|a, b| a.0 == b.0);
        let n = knots.len();
        let (first, last) = (knots[0].clone(), knots[n - 1].clone());
        if n > 1 {
            for w in knots.windows(2) {
                if w[0].1 >= w[1].1 {
                    return Err(Error::InvalidInput("lift knots must increase".into()));
                }
            }
        }
        if last.1 >= &first.1 + Q::one() && n > 1 {
            return Err(Error::InvalidInput("lift knots exceed one period".into()));
        }
        if !first.0.is_zero() {
            // interpolate across the period boundary
            let (x0, y0) = (&last.0 - Q::one(), &last.1 - Q::one());
            let y = &y0 + (&first.1 - &y0) * (-&x0) / (&first.0 - &x0);
            knots.insert(0, (Q::zero(), y));
        }
        let mut lift = Self { knots };
        lift.simplify();
        Ok(lift)
    }

    pub fn rotation(alpha: Q) -> Self {
        Self { knots: vec![(Q::zero(), alpha)] }
    }

    fn extended(&self) -> impl Iterator<Item = (Q, Q)> + '_ {
        let (x0, y0) = &self.knots[0];
        self.knots.iter().cloned().chain(std::iter::once((x0 + Q::one(), y0 + Q::one())))
    }

    /// Drops knots (other than 0) where the slope does not change.
    fn simplify(&mut self) {
        let pts: Vec<(Q, Q)> = self.extended().collect();
        let slope = |a: &(Q, Q), b: &(Q, Q)| (&b.1 - &a.1) / (&b.0 - &a.0);
        let mut keep = vec![pts[0].clone()];
        for i in 1..pts.len() - 1 {
            if slope(&pts[i - 1], &pts[i]) != slope(&pts[i], &pts[i + 1]) {
                keep.push(pts[i].clone());
            }
        }
        self.knots = keep;
    }

    pub fn knots(&self) -> &[(Q, Q)] {
        &self.knots
    }

    pub fn eval(&self, x: &Q) -> Q {
        let k = floor(x);
        let t = x - &k;
        let pts: Vec<(Q, Q)> = self.extended().collect();
        let i = pts.partition_point(|(px, _)| px <= &t) - 1;
        let ((x0, y0), (x1, y1)) = (&pts[i], &pts[i + 1]);
        y0 + (y1 - y0) * (&t - x0) / (x1 - x0) + k
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let k = x.floor();
        let t = x - k;
        let pts: Vec<(f64, f64)> = self.extended().map(|(a, b)| (to_f64(&a), to_f64(&b))).collect();
        let i = pts.partition_point(|(px, _)| *px <= t).max(1) - 1;
        let ((x0, y0), (x1, y1)) = (pts[i], pts[i + 1]);
        y0 + (y1 - y0) * (t - x0) / (x1 - x0) + k
    }

    /// Exact preimage.
    pub fn preimage(&self, y: &Q) -> Q {
        self.inverse().eval(y)
    }

    pub fn inverse(&self) -> Self {
        Self::from_points(self.knots.iter().map(|(x, y)| (y.clone(), x.clone())).collect()).expect("valid lift")
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        let mut xs: Vec<Q> = inner.knots.iter().map(|(x, _)| x.clone()).collect();
        let start = inner.eval(&Q::zero());
        let inv = inner.inverse();
        for (kx, _) in &self.knots {
            // the copy of kx inside [inner(0), inner(0) + 1)
            let shift = floor(&(&start - kx));
            let mut y = kx + &shift;
            if y < start {
                y += Q::one();
            }
            xs.push(inv.eval(&y));
        }
        Self::from_points(xs.into_iter().map(|x| { let y = self.eval(&inner.eval(&x)); (x, y) }).collect())
            .expect("valid lift")
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = Self::rotation(Q::zero());
        for _ in 0..n.unsigned_abs() {
            out = base.compose(&out);
        }
        out
    }

    /// `Some(m)` when this is `x ↦ x + m`.
    pub fn as_translation(&self) -> Option<&Q> {
        (self.knots.len() == 1).then(|| &self.knots[0].1)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CircleLift {
    /// A line map commuting with `x ↦ x + 1`.
    Line(LineMap),
    Periodic(PeriodicPlLift),
    /// `[f, g]` acts as `f ∘ g`.
    Chain(Vec<CircleLift>),
}

fn commutes_with_unit(f: &LineMap, scan: &Scan) -> Option<Real> {
    if let LineMap::Smooth(s) = f {
        if s.commutes_with_unit_translation() {
            return None;
        }
    }
    let t = LineMap::Pl(PlMap::translation(Q::one()));
    disagreement(&f.compose(&t), &t.compose(f), scan)
}

/// Wraps `f` as a lift after checking `f(x + 1) = f(x) + 1`.
pub fn quotient_commuting_element(f: &LineMap, scan: &Scan) -> Result<CircleLift> {
    if let Some(w) = commutes_with_unit(f, scan) {
        return Err(Error::NotALift { witness: w.to_string() });
    }
    Ok(match f {
        LineMap::Pl(p) if p.is_affine() => CircleLift::Periodic(PeriodicPlLift::rotation(p.right_germ().intercept.clone())),
        _ => CircleLift::Line(f.clone()),
    })
}

impl CircleLift {
    pub fn rotation(alpha: Q) -> Self {
        CircleLift::Periodic(PeriodicPlLift::rotation(alpha))
    }

    pub fn is_exact(&self) -> bool {
        match self {
            CircleLift::Line(f) => f.is_exact(),
            CircleLift::Periodic(_) => true,
            CircleLift::Chain(parts) => parts.iter().all(|p| p.is_exact()),
        }
    }

    pub fn eval_q(&self, x: &Q) -> Option<Q> {
        match self {
            CircleLift::Line(f) => f.eval_q(x),
            CircleLift::Periodic(p) => Some(p.eval(x)),
            CircleLift::Chain(parts) => parts.iter().rev().try_fold(x.clone(), |acc, p| p.eval_q(&acc)),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CircleLift::Line(f) => f.eval(x),
            CircleLift::Periodic(p) => p.eval_f64(x),
            CircleLift::Chain(parts) => parts.iter().rev().fold(x, |acc, p| p.eval(acc)),
        }
    }

    pub fn eval_real(&self, x: &Real) -> Real {
        if let Real::Exact(v) = x {
            if let Some(y) = self.eval_q(v) {
                return Real::Exact(y);
            }
        }
        Real::Approx(self.eval(x.to_f64()))
    }

    fn as_periodic(&self) -> Option<PeriodicPlLift> {
        match self {
            CircleLift::Periodic(p) => Some(p.clone()),
            CircleLift::Line(LineMap::Pl(p)) if p.is_affine() && p.right_germ().slope.is_one() => {
                Some(PeriodicPlLift::rotation(p.right_germ().intercept.clone()))
            }
            _ => None,
        }
    }

    pub fn compose(&self, inner: &CircleLift) -> CircleLift {
        if let (Some(a), Some(b)) = (self.as_periodic(), inner.as_periodic()) {
            return CircleLift::Periodic(a.compose(&b));
        }
        if let (CircleLift::Line(a), CircleLift::Line(b)) = (self, inner) {
            return CircleLift::Line(a.compose(b));
        }
        let mut parts = Vec::new();
        for p in [self, inner] {
            match p {
                CircleLift::Chain(ps) => parts.extend(ps.iter().cloned()),
                other => parts.push(other.clone()),
            }
        }
        CircleLift::Chain(parts)
    }

    pub fn inverse(&self) -> CircleLift {
        match self {
            CircleLift::Line(f) => CircleLift::Line(f.inverse()),
            CircleLift::Periodic(p) => CircleLift::Periodic(p.inverse()),
            CircleLift::Chain(parts) => CircleLift::Chain(parts.iter().rev().map(|p| p.inverse()).collect()),
        }
    }

    pub fn pow(&self, n: i64) -> CircleLift {
        if let Some(p) = self.as_periodic() {
            return CircleLift::Periodic(p.pow(n));
        }
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut out = CircleLift::rotation(Q::zero());
        for _ in 0..n.unsigned_abs() {
            out = base.compose(&out);
        }
        out
    }

    /// Lift of the identity circle map, i.e. an integer translation.
    pub fn is_circle_identity(&self, scan: &Scan) -> bool {
        if let Some(p) = self.as_periodic() {
            return p.as_translation().is_some_and(|m| m.is_integer());
        }
        let shift = (self.eval(0.0)).round();
        (0..scan.grid.min(257)).all(|i| {
            let x = i as f64 / 256.0;
            (self.eval(x) - x - shift).abs() <= LIFT_TOL
        })
    }

    /// Fixed points of the circle map in `[0, 1)`, plus whole arcs of fixed points.
    pub fn circle_fixed_points(&self, grid: usize) -> CircleFixed {
        if let Some(p) = self.as_periodic() {
            return periodic_fixed_points(&p);
        }
        let d = |x: f64| self.eval(x) - x;
        let (lo, hi) = (0..=grid).map(|i| d(i as f64 / grid as f64)).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
        let mut points = Vec::new();
        let mut arcs = 0;
        for m in (lo - 1.0).ceil() as i64..=(hi + 1.0).floor() as i64 {
            let Ok((pts, ivs)) = grid_roots(|x| d(x) - m as f64, 0.0, 1.0, grid) else { continue };
            points.extend(pts.into_iter().filter(|x| *x < 1.0 - 1e-12).map(Real::Approx));
            arcs += ivs.len();
        }
        dedup_circle(&mut points);
        CircleFixed { points, arcs }
    }
}

fn dedup_circle(points: &mut Vec<Real>) {
    points.sort_by(|a, b| a.to_f64().partial_cmp(&b.to_f64()).unwrap());
    points.dedup_by(|a, b| (a.to_f64() - b.to_f64()).abs() < 1e-9);
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircleFixed {
    pub points: Vec<Real>,
    pub arcs: usize,
}

impl CircleFixed {
    pub fn count(&self) -> usize {
        if self.arcs > 0 {
            usize::MAX
        } else {
            self.points.len()
        }
    }

    pub fn describe(&self) -> Vec<String> {
        let mut out: Vec<String> = self.points.iter().map(|p| p.to_string()).collect();
        if self.arcs > 0 {
            out.push(format!("{} arc(s)", self.arcs));
        }
        out
    }
}

fn periodic_fixed_points(p: &PeriodicPlLift) -> CircleFixed {
    let pts: Vec<(Q, Q)> = p.extended().collect();
    let mut points = Vec::new();
    let mut arcs = 0;
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
        let (d0, d1) = (y0 - x0, y1 - x1);
        let (lo, hi) = if d0 <= d1 { (&d0, &d1) } else { (&d1, &d0) };
        let mut m = floor(lo);
        if &m < lo {
            m += Q::one();
        }
        while &m <= hi {
            if d0 == d1 {
                arcs += 1;
            } else {
                let x = x0 + (x1 - x0) * (&m - &d0) / (&d1 - &d0);
                if x < Q::one() {
                    points.push(Real::Exact(x));
                }
            }
            m += Q::one();
        }
    }
    let mut exact: Vec<Q> = points.into_iter().filter_map(|r| if let Real::Exact(v) = r { Some(v) } else { None }).collect();
    exact.sort();
    exact.dedup();
    CircleFixed { points: exact.into_iter().map(Real::Exact).collect(), arcs }
}

impl fmt::Display for CircleLift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CircleLift::Line(m) => write!(f, "{m}"),
            CircleLift::Periodic(p) => match p.as_translation() {
                Some(t) => write!(f, "x ↦ x + {}", format_q(t)),
                None => write!(f, "periodic lift with {} knots", p.knots.len()),
            },
            CircleLift::Chain(parts) => {
                let s: Vec<String> = parts.iter().map(|p| format!("[{p}]")).collect();
                write!(f, "{}", s.join(" ∘ "))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rotation {
    pub estimate: f64,
    /// Present when every iterate was computed exactly.
    pub exact: Option<String>,
    pub error_bound: f64,
    pub n: usize,
    pub exact_iterates: usize,
}

impl Rotation {
    /// `|estimate − alpha| ≤ error_bound`.
    pub fn encloses(&self, alpha: f64) -> bool {
        (self.estimate - alpha).abs() <= self.error_bound
    }
}

/// `(Fᴺ(x₀) − x₀)/N` with the lift enclosure `|ρ − estimate| ≤ 1/N`.
pub fn rotation_number(f: &CircleLift, x0: &Real, n: usize) -> Result<Rotation> {
    if n == 0 {
        return Err(Error::InvalidInput("N must be at least 1".into()));
    }
    let mut exact_iterates = 0;
    let mut x = x0.clone();
    while exact_iterates < n {
        let Real::Exact(v) = &x else { break };
        if bit_size(v) > EXACT_BITS {
            break;
        }
        match f.eval_q(v) {
            Some(y) => x = Real::Exact(y),
            None => break,
        }
        exact_iterates += 1;
    }
    if exact_iterates == n {
        if let (Real::Exact(end), Real::Exact(start)) = (&x, x0) {
            let est = (end - start) / q(n as i64);
            return Ok(Rotation {
                estimate: to_f64(&est),
                exact: Some(format_q(&est)),
                error_bound: 1.0 / n as f64,
                n,
                exact_iterates,
            });
        }
    }
    // integer part carried separately so the fractional part keeps precision
    let (mut carry, mut t) = match &x {
        Real::Exact(v) => (to_f64(&floor(v)), to_f64(&frac(v))),
        Real::Approx(v) => (v.floor(), v - v.floor()),
    };
    for _ in exact_iterates..n {
        let y = f.eval(t);
        let fl = y.floor();
        carry += fl;
        t = y - fl;
    }
    let est = (carry + t - x0.to_f64()) / n as f64;
    Ok(Rotation { estimate: est, exact: None, error_bound: 1.0 / n as f64, n, exact_iterates })
}

/// Fractional parts of the orbit and the largest empty arc among them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitDensity {
    pub n: usize,
    pub largest_gap: f64,
    pub gap_start: f64,
}

pub fn orbit_mod_one(f: &CircleLift, x0: f64, n: usize) -> Vec<f64> {
    let mut t = x0 - x0.floor();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(t);
        let y = f.eval(t);
        t = y - y.floor();
    }
    out
}

pub fn orbit_density(f: &CircleLift, x0: f64, n: usize) -> OrbitDensity {
    let mut pts = orbit_mod_one(f, x0, n);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best = (1.0 - pts[pts.len() - 1] + pts[0], pts[pts.len() - 1]);
    for w in pts.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[0]);
        }
    }
    OrbitDensity { n, largest_gap: best.0, gap_start: best.1 }
}

pub fn write_orbit_csv(w: &mut impl Write, f: &CircleLift, x0: f64, n: usize) -> Result<()> {
    writeln!(w, "# line-actions orbit v1")?;
    writeln!(w, "k,x_mod_1")?;
    for (k, x) in orbit_mod_one(f, x0, n).iter().enumerate() {
        writeln!(w, "{k},{x}")?;
    }
    Ok(())
}

/// Rotation by `alpha` with the orbit points `k·alpha`, `|k| ≤ depth`, blown
/// up into arcs of length `l0·beta^|k|`, rescaled to a unit circle.
///
/// A rational `alpha` has a periodic orbit; each of its points is blown up
/// once, with the arc of the smallest `|k|` reaching it.
#[derive(Clone, Debug)]
pub struct DenjoyApproximant {
    pub alpha: Q,
    pub lift: PeriodicPlLift,
    /// Inserted arcs in the rescaled coordinate.
    pub arcs: Vec<(Q, Q)>,
}

pub fn denjoy_approximant(alpha: &Q, l0: &Q, beta: &Q, depth: usize) -> Result<DenjoyApproximant> {
    let d = depth as i64;
    let mut orbit: Vec<(Q, Q)> = (-d..=d)
        .map(|k| (frac(&(alpha * q(k))), l0 * num_traits::pow(beta.clone(), k.unsigned_abs() as usize)))
        .collect();
    orbit.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)));
    orbit.dedup_by(|later, first| later.0 == first.0);
    let total: Q = orbit.iter().map(|(_, l)| l.clone()).sum();
    let scale = Q::one() / (Q::one() + &total);
    let find = |y: &Q| orbit.binary_search_by(|(p, _)| p.cmp(y));
    // blown coordinate of the left end of the fiber over y ∈ [0, 1)
    let left = |y: &Q| {
        let i = match find(y) {
            Ok(i) | Err(i) => i,
        };
        let before: Q = orbit[..i].iter().map(|(_, l)| l.clone()).sum();
        (y + before) * &scale
    };
    let eps = qr(1, 1 << 40);
    let half = &eps / q(2);
    let mut cuts: Vec<Q> = orbit.iter().map(|(p, _)| p.clone()).collect();
    cuts.extend(orbit.iter().map(|(p, _)| frac(&(p - alpha))));
    cuts.sort();
    cuts.dedup();
    let mut points = Vec::new();
    for p in &cuts {
        let image = p + alpha;
        let carry = floor(&image);
        let gp = &image - &carry;
        let gap = |i: usize| {
            let lo = left(&orbit[i].0);
            let hi = &lo + &orbit[i].1 * &scale;
            (lo, hi)
        };
        match (find(p), find(&gp)) {
            (Ok(i), Ok(j)) => {
                let ((a, b), (c, e)) = (gap(i), gap(j));
                points.push((a, c + &carry));
                points.push((b, e + &carry));
            }
            (Ok(i), Err(_)) => {
                let (a, b) = gap(i);
                let z = left(&gp) + &carry;
                points.push((a, &z - &half));
                points.push((b, &z + &half));
            }
            (Err(_), Ok(j)) => {
                let z = left(p);
                let (c, e) = gap(j);
                points.push((&z - &half, c + &carry));
                points.push((&z + &half, e + &carry));
            }
            (Err(_), Err(_)) => points.push((left(p), left(&gp) + &carry)),
        }
    }
    let lift = PeriodicPlLift::from_points(points)?;
    let arcs = (0..orbit.len())
        .map(|i| {
            let lo = left(&orbit[i].0);
            let hi = &lo + &orbit[i].1 * &scale;
            (lo, hi)
        })
        .collect();
    Ok(DenjoyApproximant { alpha: alpha.clone(), lift, arcs })
}

/// An action on the circle.
#[derive(Clone, Debug)]
pub enum CircleAction {
    Lifts { names: Vec<String>, lifts: Vec<CircleLift> },
    /// A line action on `ℝ ∪ {∞}`, with `∞` a formal fixed point of every generator.
    Compactified(Action),
}

impl CircleAction {
    /// Lifts when every generator commutes with `x ↦ x + 1`, otherwise the
    /// one-point compactification.
    pub fn from_action(action: &Action, scan: &Scan) -> Self {
        let lifts: Result<Vec<CircleLift>> = action.generators.iter().map(|g| quotient_commuting_element(g, scan)).collect();
        match lifts {
            Ok(lifts) => CircleAction::Lifts { names: action.names.clone(), lifts },
            Err(_) => CircleAction::Compactified(action.clone()),
        }
    }

    pub fn is_lifts(&self) -> bool {
        matches!(self, CircleAction::Lifts { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CircleVerdict {
    FreeAbelian { elements_checked: usize },
    GlobalFixedPoint { point: String, elements_checked: usize },
    HypothesisViolated { word: String, fixed_points: Vec<String> },
    /// A conclusion of the dichotomy fails on a hypothesis-passing sample.
    Falsified { reason: String },
}

struct CircleElement {
    word: Word,
    lift: Option<CircleLift>,
    line: Option<LineMap>,
}

fn circle_elements(action: &CircleAction, word_len: usize) -> Vec<CircleElement> {
    let n = match action {
        CircleAction::Lifts { lifts, .. } => lifts.len(),
        CircleAction::Compactified(a) => a.len(),
    };
    let syms: Vec<(usize, i64)> = (0..n).flat_map(|g| [(g, 1), (g, -1)]).collect();
    let mut out = vec![CircleElement {
        word: Word::empty(),
        lift: matches!(action, CircleAction::Lifts { .. }).then(|| CircleLift::rotation(Q::zero())),
        line: matches!(action, CircleAction::Compactified(_)).then(LineMap::identity),
    }];
    let mut frontier = vec![0usize];
    for _ in 0..word_len {
        let mut next = Vec::new();
        for &i in &frontier {
            let last = out[i].word.last_symbol();
            for &(g, s) in &syms {
                if last == Some((g, -s)) {
                    continue;
                }
                let word = out[i].word.concat(&Word::letter(g, s));
                let e = match action {
                    CircleAction::Lifts { lifts, .. } => {
                        let sym = if s > 0 { lifts[g].clone() } else { lifts[g].inverse() };
                        CircleElement { word, lift: Some(out[i].lift.as_ref().unwrap().compose(&sym)), line: None }
                    }
                    CircleAction::Compactified(a) => {
                        CircleElement { word, lift: None, line: Some(out[i].line.as_ref().unwrap().compose(&a.symbol(g, s))) }
                    }
                };
                next.push(out.len());
                out.push(e);
            }
        }
        frontier = next;
    }
    out
}

/// Every nontrivial element has at most one fixed point on S¹; then either
/// some point is fixed by everything sampled or the action is free (and the
/// sample must commute).
pub fn circle_dichotomy_check(action: &CircleAction, word_len: usize, scan: &Scan) -> Result<CircleVerdict> {
    let names = match action {
        CircleAction::Lifts { names, .. } => names.clone(),
        CircleAction::Compactified(a) => a.names.clone(),
    };
    let elements = circle_elements(action, word_len);
    let mut fixed: Vec<(usize, Vec<Real>, bool)> = Vec::new();
    let mut nontrivial = 0;
    for (idx, e) in elements.iter().enumerate() {
        let (pts, infinity, count, describe) = match (&e.lift, &e.line) {
            (Some(l), _) => {
                if l.is_circle_identity(scan) {
                    continue;
                }
                let f = l.circle_fixed_points(scan.grid);
                (f.points.clone(), false, f.count(), f.describe())
            }
            (_, Some(m)) => {
                if m.is_identity() {
                    continue;
                }
                let f = fixed_points(m, &scan.search, scan.grid)?;
                let mut d = f.describe();
                d.push("∞".into());
                let count = if f.intervals.is_empty() { f.points.len() + 1 } else { usize::MAX };
                (f.points.clone(), true, count, d)
            }
            _ => unreachable!(),
        };
        nontrivial += 1;
        if count > 1 {
            return Ok(CircleVerdict::HypothesisViolated { word: e.word.render(&names), fixed_points: describe });
        }
        if !pts.is_empty() || infinity {
            fixed.push((idx, pts, infinity));
        }
    }
    let fixes = |e: &CircleElement, p: &Real| match (&e.lift, &e.line) {
        (Some(l), _) => {
            let d = match l.eval_real(p) {
                Real::Exact(y) => match p {
                    Real::Exact(x) => return (y - x).is_integer(),
                    _ => to_f64(&y) - p.to_f64(),
                },
                Real::Approx(y) => y - p.to_f64(),
            };
            (d - d.round()).abs() <= LIFT_TOL
        }
        (_, Some(m)) => match (m.eval_real(p), p) {
            (Real::Exact(y), Real::Exact(x)) => &y == x,
            (y, _) => (y.to_f64() - p.to_f64()).abs() <= LIFT_TOL,
        },
        _ => unreachable!(),
    };
    if let Some((idx, pts, infinity)) = fixed.first() {
        if *infinity {
            return Ok(CircleVerdict::GlobalFixedPoint { point: "∞".into(), elements_checked: nontrivial });
        }
        let p = &pts[0];
        return Ok(match elements.iter().find(|e| !fixes(e, p)) {
            None => CircleVerdict::GlobalFixedPoint { point: p.to_string(), elements_checked: nontrivial },
            Some(e) => CircleVerdict::Falsified {
                reason: format!(
                    "{} fixes {p} but {} does not",
                    elements[*idx].word.render(&names),
                    e.word.render(&names)
                ),
            },
        });
    }
    if let CircleAction::Lifts { lifts, .. } = action {
        for (i, f) in lifts.iter().enumerate() {
            for e in &elements {
                let l = e.lift.as_ref().unwrap();
                let c = f.compose(l).compose(&f.inverse()).compose(&l.inverse());
                if !c.is_circle_identity(scan) {
                    return Ok(CircleVerdict::Falsified {
                        reason: format!("free action but {} and {} do not commute", names[i], e.word.render(&names)),
                    });
                }
            }
        }
    }
    Ok(CircleVerdict::FreeAbelian { elements_checked: nontrivial })
}

/// Lift of a sine-perturbed rotation, for experiments.
pub fn sine_lift(c: f64, eps: f64) -> Result<CircleLift> {
    Ok(CircleLift::Line(SmoothMap::sine_translation(c, eps)?.into()))
}

/// Unit interval as the default circle chart.
pub fn unit_chart() -> Interval {
    Interval::closed(Q::zero(), Q::one()).expect("nonempty")
}
