//! Quasi-invariant measures and the affine shadow of an action: the scaling
//! homomorphism `A`, translation numbers, signed masses `ν`, `φ` and `θ`.
//!
//! Convention: `A(g)` is defined by `μ(g(E)) = A(g)·μ(E)`.

use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::action::{enumerate_elements, Action};
use crate::constructions::Collapse;
use crate::error::{Error, Result};
use crate::homeo::{fixed_points, Affine, FixedCount, Interval, LineMap, PlMap, Real, Scan};
use crate::rational::{format_q, from_f64, q, to_f64, Q};

/// Tolerance of the closed-form numerical tier.
pub const NUMERIC_TOL: f64 = 1e-9;
/// Tolerance of the empirical tier.
pub const EMPIRICAL_TOL: f64 = 1e-3;

#[derive(Clone, Debug)]
pub enum Backend {
    Lebesgue,
    /// `μ(E) = Leb(θ₀(E))` for a known collapse map.
    Pullback(Collapse),
    Empirical(Empirical),
}

#[derive(Clone, Debug)]
pub struct Measure {
    pub backend: Backend,
    pub tol: f64,
}

/// Heuristic measure: pullback of Lebesgue through a numerical rectification
/// of a free element `h` (so `μ([x₀, h(x₀))) = 1`).
#[derive(Clone, Debug)]
pub struct Empirical {
    pub h: LineMap,
    pub x0: f64,
    pub orbit_len: usize,
    /// Bootstrap standard error of the scaling factors on dyadic probes.
    pub error_bar: f64,
    forward: bool,
}

impl Empirical {
    fn rectified(&self, x: f64) -> f64 {
        let h = if self.forward { self.h.clone() } else { self.h.inverse() };
        let h_inv = h.inverse();
        let (x0, x1) = (self.x0, h.eval(self.x0));
        let mut y = x;
        let mut k = 0.0;
        for _ in 0..self.orbit_len {
            if y < x0 {
                y = h.eval(y);
                k -= 1.0;
            } else if y >= x1 {
                y = h_inv.eval(y);
                k += 1.0;
            } else {
                return k + (y - x0) / (x1 - x0);
            }
        }
        f64::NAN
    }

    fn unrectify(&self, t: f64) -> f64 {
        let h = if self.forward { self.h.clone() } else { self.h.inverse() };
        let (x0, x1) = (self.x0, h.eval(self.x0));
        let k = t.floor();
        let base = x0 + (t - k) * (x1 - x0);
        h.pow(k as i64).eval(base)
    }
}

impl Measure {
    pub fn lebesgue() -> Self {
        Self { backend: Backend::Lebesgue, tol: NUMERIC_TOL }
    }

    pub fn pullback(collapse: Collapse) -> Self {
        Self { backend: Backend::Pullback(collapse), tol: NUMERIC_TOL }
    }

    /// Rectifies `h` near `x0` and estimates error bars from the scaling
    /// factors of `action`'s generators on 16 dyadic probes.
    pub fn empirical(action: &Action, h: &LineMap, x0: f64, orbit_len: usize, seed: u64) -> Result<Self> {
        let hx = h.eval(x0);
        if hx == x0 {
            return Err(Error::HasFixedPoint { at: Real::Approx(x0).to_string() });
        }
        let mut emp = Empirical { h: h.clone(), x0, orbit_len, error_bar: 0.0, forward: hx > x0 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for g in &action.generators {
            let samples: Vec<f64> = (0..16)
                .map(|k| {
                    let (t0, t1) = (k as f64 / 4.0 - 2.0, (k + 1) as f64 / 4.0 - 2.0);
                    let (a, b) = (emp.unrectify(t0), emp.unrectify(t1));
                    (emp.rectified(g.eval(b)) - emp.rectified(g.eval(a))) / (t1 - t0)
                })
                .collect();
            if samples.iter().any(|s| !s.is_finite()) {
                return Err(Error::BoundExhausted(format!("orbit length {orbit_len} too short to rectify probes")));
            }
            let means: Vec<f64> = (0..200)
                .map(|_| (0..samples.len()).map(|_| samples[rng.gen_range(0..samples.len())]).sum::<f64>() / 16.0)
                .collect();
            let m = means.iter().sum::<f64>() / means.len() as f64;
            let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
            worst = worst.max(var.sqrt());
        }
        emp.error_bar = worst;
        Ok(Self { backend: Backend::Empirical(emp), tol: EMPIRICAL_TOL })
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.backend, Backend::Empirical(_))
    }

    pub fn name(&self) -> &'static str {
        match self.backend {
            Backend::Lebesgue => "lebesgue",
            Backend::Pullback(_) => "pullback",
            Backend::Empirical(_) => "empirical",
        }
    }

    pub fn normalization(&self) -> &'static str {
        match self.backend {
            Backend::Lebesgue => "mu([0,1)) = 1",
            Backend::Pullback(_) => "theta0 pushes mu to Lebesgue",
            Backend::Empirical(_) => "mu([x0, h(x0))) = 1",
        }
    }

    /// Distribution function up to an additive constant.
    fn cdf_q(&self, x: &Q) -> Option<Q> {
        match &self.backend {
            Backend::Lebesgue => Some(x.clone()),
            Backend::Pullback(c) => Some(c.eval(x)),
            Backend::Empirical(_) => None,
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match &self.backend {
            Backend::Lebesgue => x,
            Backend::Pullback(c) => c.eval_f64(x),
            Backend::Empirical(e) => e.rectified(x),
        }
    }

    /// Exact signed mass, when the backend is exact.
    pub fn nu_q(&self, x0: &Q, x1: &Q) -> Option<Q> {
        Some(self.cdf_q(x1)? - self.cdf_q(x0)?)
    }

    /// `μ([x₀, x₁))` if `x₀ < x₁`, `0` if equal, `−μ([x₁, x₀))` otherwise.
    pub fn nu(&self, x0: f64, x1: f64) -> f64 {
        if x0 == x1 {
            0.0
        } else {
            self.cdf(x1) - self.cdf(x0)
        }
    }

    pub fn nu_real(&self, x0: &Real, x1: &Real) -> Real {
        if let (Real::Exact(a), Real::Exact(b)) = (x0, x1) {
            if let Some(v) = self.nu_q(a, b) {
                return Real::Exact(v);
            }
        }
        Real::Approx(self.nu(x0.to_f64(), x1.to_f64()))
    }

    /// `θ(x) = ν(0, x)`.
    pub fn theta(&self, x: f64) -> f64 {
        self.nu(0.0, x)
    }

    pub fn theta_real(&self, x: &Real) -> Real {
        self.nu_real(&Real::Exact(Q::zero()), x)
    }

    /// Mass of `[-n, n]`; unbounded in `n` for every backend here.
    pub fn mass_of_ball(&self, n: f64) -> f64 {
        self.nu(-n, n)
    }
}

/// `x ↦ a·x + b`, `a > 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum AffineMap {
    Exact(Affine),
    Approx { a: f64, b: f64 },
}

impl AffineMap {
    pub fn from_reals(a: Real, b: Real) -> Self {
        match (a, b) {
            (Real::Exact(a), Real::Exact(b)) => AffineMap::Exact(Affine::new(a, b)),
            (a, b) => AffineMap::Approx { a: a.to_f64(), b: b.to_f64() },
        }
    }

    pub fn a(&self) -> f64 {
        match self {
            AffineMap::Exact(m) => to_f64(&m.slope),
            AffineMap::Approx { a, .. } => *a,
        }
    }

    pub fn b(&self) -> f64 {
        match self {
            AffineMap::Exact(m) => to_f64(&m.intercept),
            AffineMap::Approx { b, .. } => *b,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, AffineMap::Exact(_))
    }

    /// `(a₁, b₁)∘(a₂, b₂) = (a₁a₂, a₁b₂ + b₁)`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        match (self, inner) {
            (AffineMap::Exact(f), AffineMap::Exact(g)) => AffineMap::Exact(f.after(g)),
            _ => AffineMap::Approx { a: self.a() * inner.a(), b: self.a() * inner.b() + self.b() },
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.a() * x + self.b()
    }

    pub fn apply_real(&self, x: &Real) -> Real {
        match (self, x) {
            (AffineMap::Exact(m), Real::Exact(v)) => Real::Exact(m.apply(v)),
            _ => Real::Approx(self.apply(x.to_f64())),
        }
    }

    pub fn distance(&self, other: &AffineMap) -> f64 {
        if let (AffineMap::Exact(f), AffineMap::Exact(g)) = (self, other) {
            if f == g {
                return 0.0;
            }
        }
        (self.a() - other.a()).abs().max((self.b() - other.b()).abs())
    }
}

impl fmt::Display for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AffineMap::Exact(m) => write!(f, "({}, {})", format_q(&m.slope), format_q(&m.intercept)),
            AffineMap::Approx { a, b } => write!(f, "({a}, {b})"),
        }
    }
}

impl Serialize for AffineMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AffineMap", 3)?;
        match self {
            AffineMap::Exact(m) => {
                st.serialize_field("a", &format_q(&m.slope))?;
                st.serialize_field("b", &format_q(&m.intercept))?;
                st.serialize_field("exact", &true)?;
            }
            AffineMap::Approx { a, b } => {
                st.serialize_field("a", a)?;
                st.serialize_field("b", b)?;
                st.serialize_field("exact", &false)?;
            }
        }
        st.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scaling {
    pub value: Real,
    /// Largest relative disagreement between the three probes.
    pub deviation: f64,
}

fn real_sub(a: &Real, b: &Real) -> Real {
    match (a, b) {
        (Real::Exact(x), Real::Exact(y)) => Real::Exact(x - y),
        _ => Real::Approx(a.to_f64() - b.to_f64()),
    }
}

fn real_div(a: &Real, b: &Real) -> Real {
    match (a, b) {
        (Real::Exact(x), Real::Exact(y)) => Real::Exact(x / y),
        _ => Real::Approx(a.to_f64() / b.to_f64()),
    }
}

fn real_abs_diff(a: &Real, b: &Real) -> f64 {
    match real_sub(a, b) {
        Real::Exact(d) => to_f64(&d.abs()),
        Real::Approx(d) => d.abs(),
    }
}

fn probe_mass(mu: &Measure, g: &LineMap, lo: &Real, hi: &Real) -> Result<(Real, Real)> {
    let m = mu.nu_real(lo, hi);
    if m.to_f64() <= 0.0 {
        return Err(Error::InvalidInput(format!("probe [{lo}, {hi}] has zero mass")));
    }
    let gm = mu.nu_real(&g.eval_real(lo), &g.eval_real(hi));
    Ok((gm, m))
}

/// `A(g) = μ(g(P))/μ(P)`, re-checked on `P ± 2|P|`.
pub fn scaling_factor(mu: &Measure, g: &LineMap, probe: &Interval) -> Result<Scaling> {
    let (Some(lo), Some(hi)) = (&probe.lo, &probe.hi) else {
        return Err(Error::UnboundedSearch);
    };
    let len = hi - lo;
    let mut values = Vec::with_capacity(3);
    for shift in [Q::zero(), &len * q(2), &len * q(-2)] {
        let (a, b) = (Real::Exact(lo + &shift), Real::Exact(hi + &shift));
        let (gm, m) = probe_mass(mu, g, &a, &b)?;
        values.push(real_div(&gm, &m));
    }
    let value = values[0].clone();
    let scale = value.to_f64().abs().max(1.0);
    let deviation = values[1..].iter().map(|v| real_abs_diff(v, &value) / scale).fold(0.0, f64::max);
    if deviation > mu.tol {
        return Err(Error::NotQuasiInvariant { map: g.to_string(), deviation });
    }
    Ok(Scaling { value, deviation })
}

pub fn default_probe() -> Interval {
    Interval::closed(Q::zero(), Q::one()).expect("nonempty")
}

fn is_one(v: &Real, tol: f64) -> bool {
    match v {
        Real::Exact(x) => x.is_one() || (to_f64(x) - 1.0).abs() <= tol,
        Real::Approx(x) => (x - 1.0).abs() <= tol,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TranslationNumber {
    pub value: Real,
    /// Largest disagreement over the three base points.
    pub spread: f64,
}

/// `τ_μ(f) = ν(x, f(x))` on the kernel of `A`; checked at `x`, `x + 37/100`
/// and `x − 129/100`.
pub fn translation_number(mu: &Measure, f: &LineMap, x: &Real) -> Result<TranslationNumber> {
    let a = scaling_factor(mu, f, &default_probe())?;
    if !is_one(&a.value, mu.tol) {
        return Err(Error::OffKernel { scaling: a.value.to_string() });
    }
    let shifted = |k: i64| match x {
        Real::Exact(v) => Real::Exact(v + crate::rational::qr(k, 100)),
        Real::Approx(v) => Real::Approx(v + k as f64 / 100.0),
    };
    let values: Vec<Real> = [0, 37, -129].iter().map(|&k| {
        let p = shifted(k);
        mu.nu_real(&p, &f.eval_real(&p))
    }).collect();
    let spread = values[1..].iter().map(|v| real_abs_diff(v, &values[0])).fold(0.0, f64::max);
    if spread > mu.tol {
        return Err(Error::NotQuasiInvariant { map: f.to_string(), deviation: spread });
    }
    Ok(TranslationNumber { value: values[0].clone(), spread })
}

/// `φ(g) = (A(g), ν(0, g(0)))`.
pub fn phi(mu: &Measure, g: &LineMap) -> Result<AffineMap> {
    let a = scaling_factor(mu, g, &default_probe())?.value;
    let zero = Real::Exact(Q::zero());
    let b = mu.nu_real(&zero, &g.eval_real(&zero));
    Ok(AffineMap::from_reals(a, b))
}

pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub max: f64,
    pub generator: Option<String>,
    pub at: f64,
    pub points: usize,
    pub exact: bool,
}

/// `max |θ(g(x)) − φ(g)(θ(x))|` over generators and grid points; exact
/// rational arithmetic when both measure and action allow it.
pub fn semiconjugacy_residual(mu: &Measure, action: &Action, grid: &[f64]) -> Result<Residual> {
    let exact = mu.is_exact() && action.is_pl();
    let mut out = Residual { max: 0.0, generator: None, at: f64::NAN, points: grid.len(), exact };
    for (name, g) in action.names.iter().zip(&action.generators) {
        let p = phi(mu, g)?;
        for &x in grid {
            let xr = if exact { Real::Exact(from_f64(x)?) } else { Real::Approx(x) };
            let lhs = mu.theta_real(&g.eval_real(&xr));
            let rhs = p.apply_real(&mu.theta_real(&xr));
            let d = real_abs_diff(&lhs, &rhs);
            if d > out.max || out.generator.is_none() {
                out.max = out.max.max(d);
                if d >= out.max {
                    out.generator = Some(name.clone());
                    out.at = x;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberScan {
    pub points: usize,
    pub min_increment: f64,
    /// Grid intervals on which `θ` stays constant to tolerance.
    pub fibers: Vec<[f64; 2]>,
}

impl FiberScan {
    pub fn injective(&self) -> bool {
        self.fibers.is_empty()
    }
}

/// Adjacent grid points with `θ`-increment ≤ `tol` are merged into fibers.
pub fn theta_fiber_scan(mu: &Measure, lo: f64, hi: f64, grid: usize, tol: f64) -> FiberScan {
    let xs = uniform_grid(lo, hi, grid);
    let th: Vec<f64> = xs.iter().map(|&x| mu.theta(x)).collect();
    let mut fibers: Vec<[f64; 2]> = Vec::new();
    let mut min_increment = f64::INFINITY;
    for i in 1..xs.len() {
        let d = th[i] - th[i - 1];
        min_increment = min_increment.min(d);
        if d <= tol {
            match fibers.last_mut() {
                Some(f) if f[1] == xs[i - 1] => f[1] = xs[i],
                _ => fibers.push([xs[i - 1], xs[i]]),
            }
        }
    }
    FiberScan { points: xs.len(), min_increment, fibers }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub element: String,
    pub fixed_points: usize,
    pub scaling: Real,
    pub consistent: bool,
}

/// A nontrivial element has exactly one fixed point iff `A(g) ≠ 1`.
pub fn kernel_fixed_point_dichotomy(mu: &Measure, g: &LineMap, scan: &Scan) -> Result<KernelReport> {
    if g.is_identity() {
        return Err(Error::InvalidInput("the dichotomy concerns nontrivial elements".into()));
    }
    let fp = fixed_points(g, &scan.search, scan.grid)?;
    let a = scaling_factor(mu, g, &default_probe())?.value;
    let one_fixed = fp.count() == FixedCount::One;
    let n = match fp.count() {
        FixedCount::Zero => 0,
        FixedCount::One => 1,
        FixedCount::AtLeastTwo => fp.points.len().max(2),
    };
    Ok(KernelReport { element: g.to_string(), fixed_points: n, consistent: one_fixed != is_one(&a, mu.tol), scaling: a })
}

/// Sampled kernel dichotomy over every nontrivial element up to `word_len`.
pub fn kernel_dichotomy_sample(mu: &Measure, action: &Action, word_len: usize, scan: &Scan) -> Result<Vec<KernelReport>> {
    let mut out = Vec::new();
    for e in enumerate_elements(action, word_len) {
        if e.is_identity() {
            continue;
        }
        let mut r = kernel_fixed_point_dichotomy(mu, &e.map, scan)?;
        r.element = action.render(&e.word);
        out.push(r);
    }
    Ok(out)
}

/// `c` with `c∘h∘c⁻¹ = x + direction`, exact on `window`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rectification {
    pub c: PlMap,
    pub direction: i64,
    /// Domain (in rectified coordinates) on which the identity holds exactly.
    pub window: Interval,
    pub everywhere: bool,
}

impl Rectification {
    pub fn conjugated(&self, h: &PlMap) -> PlMap {
        self.c.compose(h).compose(&self.c.inverse())
    }

    /// Exact check of `c∘h∘c⁻¹ = x + direction` on the window.
    pub fn verify(&self, h: &PlMap) -> bool {
        let m = self.conjugated(h);
        let (lo, hi) = (self.window.lo.as_ref(), self.window.hi.as_ref());
        let inside = |x: &Q| lo.is_none_or(|l| x >= l) && hi.is_none_or(|u| x <= u);
        let t = q(self.direction);
        if self.everywhere {
            return m == PlMap::translation(t);
        }
        m.breakpoints().iter().chain(lo).chain(hi).filter(|x| inside(x)).all(|x| m.eval(x) == x + &t)
    }
}

/// Fundamental-domain rectification of a fixed-point-free piecewise-affine
/// map, built over `domains` translates on each side of `[0, h(0)]`.
pub fn rectify_free_element(h: &LineMap, domains: usize) -> Result<Rectification> {
    let Some(hp) = h.as_pl() else {
        return Err(Error::Unsupported("exact rectification needs a piecewise-affine map".into()));
    };
    let (pts, ivs) = hp.fixed_points();
    if let Some(p) = pts.first() {
        return Err(Error::HasFixedPoint { at: format_q(p) });
    }
    if let Some(iv) = ivs.first() {
        return Err(Error::HasFixedPoint { at: iv.to_string() });
    }
    let x0 = Q::zero();
    let direction = if hp.eval(&x0) > x0 { 1 } else { -1 };
    let f = if direction == 1 { hp.clone() } else { hp.inverse() };
    let period = f.eval(&x0) - &x0;
    let c0 = |x: &Q| (x - &x0) / &period;
    let k = domains as i64;
    let mut knots: Vec<(Q, Q)> = Vec::new();
    for j in -k..=k {
        let (lo, hi) = (f.pow(j).eval(&x0), f.pow(j + 1).eval(&x0));
        let back = f.pow(-j);
        knots.push((lo.clone(), q(j)));
        for b in back.breakpoints().iter().filter(|b| **b > lo && **b < hi) {
            knots.push((b.clone(), c0(&back.eval(b)) + q(j)));
        }
    }
    knots.push((f.pow(k + 1).eval(&x0), q(k + 1)));
    knots.sort_by(|a, b| a.0.cmp(&b.0));
    knots.dedup_by(|a, b| a.0 == b.0);
    let slope = |a: &(Q, Q), b: &(Q, Q)| (&b.1 - &a.1) / (&b.0 - &a.0);
    let n = knots.len();
    let left = slope(&knots[0], &knots[1]);
    let right = slope(&knots[n - 2], &knots[n - 1]);
    let c = PlMap::from_knots(&knots, left, right)?;
    let everywhere = f.is_affine();
    let window = if everywhere {
        Interval::whole()
    } else {
        Interval::closed(q(-k), q(k))?
    };
    let r = Rectification { c, direction, window, everywhere };
    debug_assert!(r.verify(hp));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{blowup, bs12, BlowupSpec};
    use crate::homeo::SmoothMap;
    use crate::rational::qr;

    fn aff(s: Q, t: Q) -> LineMap {
        PlMap::affine(s, t).unwrap().into()
    }

    #[test]
    fn nu_examples() {
        let m = Measure::lebesgue();
        assert_eq!(m.nu(0.0, 5.0), 5.0);
        assert_eq!(m.nu(5.0, 0.0), -5.0);
        assert_eq!(m.nu(2.5, 2.5), 0.0);
        assert_eq!(m.nu_q(&q(1), &qr(7, 2)), Some(qr(5, 2)));
        assert!(m.mass_of_ball(1e6) > 1e6);
    }

    #[test]
    fn pullback_ignores_gaps() {
        let bu = blowup(&bs12(), &BlowupSpec::new(qr(1, 23), qr(1, 2), qr(1, 10), 3)).unwrap();
        let m = Measure::pullback(bu.collapse.clone());
        let g = bu.gap_at(&qr(1, 23)).unwrap();
        assert_eq!(m.nu_q(&g.lo, &g.hi), Some(Q::zero()));
        let (a, b) = (&g.lo - qr(1, 100), &g.hi + qr(1, 100));
        assert_eq!(m.nu_q(&a, &b), Some(qr(2, 100)));
    }

    #[test]
    fn scaling_examples() {
        let m = Measure::lebesgue();
        let p = default_probe();
        assert_eq!(scaling_factor(&m, &aff(q(2), q(0)), &p).unwrap().value, Real::Exact(q(2)));
        assert_eq!(scaling_factor(&m, &aff(q(1), q(1)), &p).unwrap().value, Real::Exact(q(1)));
        assert_eq!(scaling_factor(&m, &aff(qr(3, 5), q(7)), &p).unwrap().value, Real::Exact(qr(3, 5)));
        let bent: LineMap = PlMap::new(vec![q(0)], vec![q(1), q(2)], (q(0), q(0))).unwrap().into();
        assert!(matches!(scaling_factor(&m, &bent, &p), Err(Error::NotQuasiInvariant { .. })));
    }

    #[test]
    fn translation_number_examples() {
        let m = Measure::lebesgue();
        let x = Real::Exact(qr(1, 3));
        assert_eq!(translation_number(&m, &aff(q(1), q(1)), &x).unwrap().value, Real::Exact(q(1)));
        assert!(matches!(translation_number(&m, &aff(q(2), q(0)), &x), Err(Error::OffKernel { .. })));
        let s: LineMap = SmoothMap::sine_translation(0.0, 0.1).unwrap().into();
        assert!(matches!(translation_number(&m, &s, &Real::Approx(0.0)), Err(Error::NotQuasiInvariant { .. })));
    }

    #[test]
    fn blown_translation_has_unit_translation_number() {
        let bu = blowup(&bs12(), &BlowupSpec::new(qr(1, 23), qr(1, 2), qr(1, 10), 3)).unwrap();
        let m = Measure::pullback(bu.collapse.clone());
        let a = &bu.action.generators[0];
        let t = translation_number(&m, a, &Real::Exact(qr(1, 7))).unwrap();
        assert!((t.value.to_f64() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn phi_examples() {
        let m = Measure::lebesgue();
        let bs = bs12();
        let (a, b) = (&bs.generators[0], &bs.generators[1]);
        assert_eq!(phi(&m, a).unwrap(), AffineMap::Exact(Affine::new(q(1), q(1))));
        assert_eq!(phi(&m, b).unwrap(), AffineMap::Exact(Affine::new(q(2), q(0))));
        let ab = phi(&m, &a.compose(b)).unwrap();
        assert_eq!(ab, phi(&m, a).unwrap().compose(&phi(&m, b).unwrap()));
        assert_eq!(ab, AffineMap::Exact(Affine::new(q(2), q(1))));
        assert_eq!(serde_json::to_string(&ab).unwrap(), r#"{"a":"2","b":"1","exact":true}"#);
    }

    #[test]
    fn lebesgue_residual_is_zero() {
        let r = semiconjugacy_residual(&Measure::lebesgue(), &bs12(), &uniform_grid(-5.0, 5.0, 101)).unwrap();
        assert_eq!(r.max, 0.0);
        assert!(r.exact);
        assert_eq!(Measure::lebesgue().theta(3.5), 3.5);
    }

    #[test]
    fn blowup_residual_and_fibers() {
        let bu = blowup(&bs12(), &BlowupSpec::new(qr(1, 23), qr(1, 2), qr(1, 10), 4)).unwrap();
        let m = Measure::pullback(bu.collapse.clone());
        let r = semiconjugacy_residual(&m, &bu.action, &uniform_grid(-4.0, 4.0, 200)).unwrap();
        assert!(r.max <= 1e-9, "{r:?}");
        let scan = theta_fiber_scan(&m, -4.0, 4.0, 2048, 1e-12);
        assert!(!scan.injective());
        assert!(scan.fibers.iter().any(|f| f[0] <= 1.0 / 23.0 + 0.1 && f[1] >= 1.0 / 23.0));
        let leb = theta_fiber_scan(&Measure::lebesgue(), -4.0, 4.0, 2048, 1e-12);
        assert!(leb.injective());
        assert!(leb.min_increment > 0.0);
    }

    #[test]
    fn kernel_dichotomy_examples() {
        let m = Measure::lebesgue();
        let scan = Scan::default();
        let b = kernel_fixed_point_dichotomy(&m, &aff(q(2), q(0)), &scan).unwrap();
        assert_eq!((b.fixed_points, b.consistent), (1, true));
        let a = kernel_fixed_point_dichotomy(&m, &aff(q(1), q(1)), &scan).unwrap();
        assert_eq!((a.fixed_points, a.consistent), (0, true));
        let bs = bs12();
        let w = bs.generators[1].compose(&bs.generators[0]).compose(&bs.generators[1].inverse());
        let r = kernel_fixed_point_dichotomy(&m, &w.compose(&bs.generators[0].inverse()), &scan).unwrap();
        assert_eq!((r.fixed_points, r.consistent), (0, true));
        assert!(kernel_dichotomy_sample(&m, &bs, 3, &scan).unwrap().iter().all(|r| r.consistent));
    }

    #[test]
    fn rectification_examples() {
        let r = rectify_free_element(&aff(q(1), q(2)), 4).unwrap();
        assert_eq!(r.c, PlMap::affine(qr(1, 2), q(0)).unwrap());
        let r = rectify_free_element(&aff(q(1), q(1)), 4).unwrap();
        assert!(r.c.is_identity());
        let r = rectify_free_element(&aff(q(1), qr(1, 2)), 4).unwrap();
        assert_eq!(r.c, PlMap::affine(q(2), q(0)).unwrap());
        let down = rectify_free_element(&aff(q(1), q(-3)), 4).unwrap();
        assert_eq!(down.direction, -1);
        assert!(matches!(rectify_free_element(&aff(q(2), q(0)), 4), Err(Error::HasFixedPoint { .. })));
        // bent but free: slopes 1/2 then 2, h(x) > x everywhere
        let h = PlMap::new(vec![q(0)], vec![qr(1, 2), q(2)], (q(0), q(1))).unwrap();
        assert!(h.fixed_points().0.is_empty());
        let r = rectify_free_element(&LineMap::Pl(h.clone()), 3).unwrap();
        assert!(!r.everywhere);
        assert!(r.verify(&h));
    }

    #[test]
    fn empirical_backend_carries_error_bars() {
        let bs = bs12();
        let m = Measure::empirical(&bs, &bs.generators[0], 0.0, 10_000, 0).unwrap();
        assert_eq!(m.name(), "empirical");
        assert!(!m.is_exact());
        let Backend::Empirical(e) = &m.backend else { unreachable!() };
        assert!(e.error_bar < 1e-9);
        assert!((m.nu(0.0, 1.0) - 1.0).abs() < 1e-12);
    }
}
