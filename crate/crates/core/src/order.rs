//! Eventual order at +∞, commensurability, infinitesimals and the
//! abelian / metabelian checks.
//!
//! For piecewise-affine maps "g(x) > h(x) for all sufficiently large x" is a
//! statement about right germs, which are exact affine maps, so every
//! question here is decided exactly on that path.

use std::cmp::Ordering;
use std::collections::HashSet;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::action::{enumerate_elements, Action, Element};
use crate::error::{Error, Result};
use crate::homeo::{disagreement, fixed_points, Affine, FixedCount, LineMap, PlMap, Real, Scan, SmoothMap};
use crate::rational::{format_q, q, Q};
use crate::word::Word;

/// Default search bound for powers.
pub const DEFAULT_POWER_BOUND: i64 = 64;

/// Eventual affine form `slope·x + intercept` of a piecewise-affine map.
pub type GermAtInfinity = Affine;

pub fn germ(f: &PlMap) -> &GermAtInfinity {
    f.right_germ()
}

/// Lexicographic on `(slope, intercept)`; agrees with the eventual order.
pub fn germ_cmp(a: &GermAtInfinity, b: &GermAtInfinity) -> Ordering {
    a.slope.cmp(&b.slope).then_with(|| a.intercept.cmp(&b.intercept))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "order", rename_all = "snake_case")]
pub enum OrderResult {
    /// `g(x) > h(x)` for every `x ≥ threshold`.
    Greater { threshold: Real },
    Less { threshold: Real },
    Equal,
    /// Distinct maps with identical germs; impossible inside a group whose
    /// nontrivial elements have at most one fixed point.
    EventuallyEqual { threshold: Real },
}

impl OrderResult {
    pub fn ordering(&self) -> Option<Ordering> {
        match self {
            OrderResult::Greater { .. } => Some(Ordering::Greater),
            OrderResult::Less { .. } => Some(Ordering::Less),
            OrderResult::Equal => Some(Ordering::Equal),
            OrderResult::EventuallyEqual { .. } => None,
        }
    }

    pub fn threshold(&self) -> Option<&Real> {
        match self {
            OrderResult::Greater { threshold }
            | OrderResult::Less { threshold }
            | OrderResult::EventuallyEqual { threshold } => Some(threshold),
            OrderResult::Equal => None,
        }
    }
}

/// Eventual order of two maps.
pub fn compare(g: &LineMap, h: &LineMap) -> Result<OrderResult> {
    if let (LineMap::Pl(a), LineMap::Pl(b)) = (g, h) {
        return Ok(compare_pl(a, b));
    }
    if g == h {
        return Ok(OrderResult::Equal);
    }
    compare_asymptotic(g, h)
}

pub fn compare_pl(g: &PlMap, h: &PlMap) -> OrderResult {
    if g == h {
        return OrderResult::Equal;
    }
    let (gg, hg) = (germ(g), germ(h));
    let mut threshold = g
        .breakpoints()
        .iter()
        .chain(h.breakpoints())
        .max()
        .cloned()
        .unwrap_or_else(Q::zero);
    if gg.slope != hg.slope {
        let cross = (&hg.intercept - &gg.intercept) / (&gg.slope - &hg.slope);
        threshold = threshold.max(cross);
    }
    let threshold = Real::Exact(threshold + Q::one());
    match germ_cmp(gg, hg) {
        Ordering::Greater => OrderResult::Greater { threshold },
        Ordering::Less => OrderResult::Less { threshold },
        Ordering::Equal => OrderResult::EventuallyEqual { threshold },
    }
}

/// `slope·x + intercept + p(x)` with `|p| ≤ wobble` eventually.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Asymptotic {
    slope: f64,
    intercept: f64,
    wobble: f64,
    /// Beyond this point the description is valid.
    from: f64,
}

fn asymptotic(f: &LineMap) -> Asymptotic {
    match f {
        LineMap::Pl(p) => {
            let g = germ(p);
            let from = p.breakpoints().last().map_or(f64::NEG_INFINITY, crate::rational::to_f64);
            Asymptotic {
                slope: crate::rational::to_f64(&g.slope),
                intercept: crate::rational::to_f64(&g.intercept),
                wobble: 0.0,
                from,
            }
        }
        LineMap::Smooth(SmoothMap::Affine { a, b }) => {
            Asymptotic { slope: *a, intercept: *b, wobble: 0.0, from: f64::NEG_INFINITY }
        }
        LineMap::Smooth(SmoothMap::SineTranslation { c, eps }) => {
            Asymptotic { slope: 1.0, intercept: *c, wobble: eps.abs(), from: f64::NEG_INFINITY }
        }
        LineMap::Composite(parts) => parts.iter().rev().fold(
            Asymptotic { slope: 1.0, intercept: 0.0, wobble: 0.0, from: f64::NEG_INFINITY },
            |inner, m| {
                let outer = asymptotic(m);
                // inner(x) ≥ outer.from once x is large enough
                let need = if outer.from.is_finite() {
                    (outer.from + inner.wobble - inner.intercept) / inner.slope
                } else {
                    f64::NEG_INFINITY
                };
                Asymptotic {
                    slope: outer.slope * inner.slope,
                    intercept: outer.slope * inner.intercept + outer.intercept,
                    wobble: outer.slope * inner.wobble + outer.wobble,
                    from: inner.from.max(need),
                }
            },
        ),
        LineMap::Inverse(inner) => {
            let a = asymptotic(inner);
            let from = if a.from.is_finite() { a.slope * a.from + a.intercept + a.wobble } else { a.from };
            Asymptotic { slope: 1.0 / a.slope, intercept: -a.intercept / a.slope, wobble: a.wobble / a.slope, from }
        }
    }
}

const SLOPE_TOL: f64 = 1e-12;

fn compare_asymptotic(g: &LineMap, h: &LineMap) -> Result<OrderResult> {
    let (a, b) = (asymptotic(g), asymptotic(h));
    let base = a.from.max(b.from).max(0.0);
    let ds = a.slope - b.slope;
    let dt = a.intercept - b.intercept;
    let w = a.wobble + b.wobble;
    let (ord, threshold) = if ds.abs() > SLOPE_TOL * a.slope.max(b.slope) {
        let cross = (dt.abs() + w) / ds.abs();
        (if ds > 0.0 { Ordering::Greater } else { Ordering::Less }, base.max(cross) + 1.0)
    } else if dt.abs() > w + SLOPE_TOL {
        (if dt > 0.0 { Ordering::Greater } else { Ordering::Less }, base + 1.0)
    } else {
        return Err(Error::OrderUndecided { tol: SLOPE_TOL });
    };
    let threshold = Real::Approx(threshold);
    Ok(match ord {
        Ordering::Greater => OrderResult::Greater { threshold },
        _ => OrderResult::Less { threshold },
    })
}

pub fn is_positive(g: &LineMap) -> Result<bool> {
    Ok(matches!(compare(g, &LineMap::identity())?, OrderResult::Greater { .. }))
}

fn is_greater(g: &LineMap, h: &LineMap) -> Result<bool> {
    Ok(matches!(compare(g, h)?, OrderResult::Greater { .. }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Commensurability {
    /// Minimal `|n|`, `|m|` (signed) with `g⁻ⁿ < h < gⁿ` and `h⁻ᵐ < g < hᵐ`.
    Yes { n: i64, m: i64 },
    /// `proof` is true when germ analysis rules out every power.
    No { reason: String, proof: bool },
}

fn sandwich_power(g: &LineMap, h: &LineMap, bound: i64) -> Result<Option<i64>> {
    // germ arithmetic is enough on the exact path
    if let (LineMap::Pl(gp), LineMap::Pl(hp)) = (g, h) {
        let (gg, hg) = (germ(gp), germ(hp));
        for k in 1..=bound {
            for n in [k, -k] {
                let up = gg.pow(n);
                let down = gg.pow(-n);
                if germ_cmp(&down, hg) == Ordering::Less && germ_cmp(hg, &up) == Ordering::Less {
                    return Ok(Some(n));
                }
            }
        }
        return Ok(None);
    }
    for k in 1..=bound {
        for n in [k, -k] {
            let up = g.pow(n);
            let down = g.pow(-n);
            if is_greater(h, &down)? && is_greater(&up, h)? {
                return Ok(Some(n));
            }
        }
    }
    Ok(None)
}

/// Germ-level reason why no power of `g` sandwiches `h`.
fn sandwich_impossible(g: &PlMap, h: &PlMap) -> Option<String> {
    let (gg, hg) = (germ(g), germ(h));
    if gg.slope.is_one() && gg.intercept.is_zero() {
        return Some("every power of g has the identity germ at +∞".into());
    }
    if gg.slope.is_one() && !hg.slope.is_one() {
        return Some(format!(
            "powers of g have germ slope 1, h has germ slope {}",
            format_q(&hg.slope)
        ));
    }
    None
}

pub fn commensurate(g: &LineMap, h: &LineMap, power_bound: i64) -> Result<Commensurability> {
    if g.is_identity() || h.is_identity() {
        return Err(Error::InvalidInput("commensurability needs nontrivial elements".into()));
    }
    if let (LineMap::Pl(gp), LineMap::Pl(hp)) = (g, h) {
        if let Some(r) = sandwich_impossible(gp, hp) {
            return Ok(Commensurability::No { reason: format!("g⁻ⁿ < h < gⁿ fails for all n: {r}"), proof: true });
        }
        if let Some(r) = sandwich_impossible(hp, gp) {
            return Ok(Commensurability::No { reason: format!("h⁻ᵐ < g < hᵐ fails for all m: {r}"), proof: true });
        }
    }
    let n = sandwich_power(g, h, power_bound)?;
    let m = sandwich_power(h, g, power_bound)?;
    Ok(match (n, m) {
        (Some(n), Some(m)) => Commensurability::Yes { n, m },
        _ => Commensurability::No { reason: format!("bound {power_bound} exhausted"), proof: false },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominatingPower {
    /// Signed: negative when `h` itself is negative.
    pub n: i64,
    /// `h⁻ⁿ < g⁻¹` also holds.
    pub inverse_side: bool,
}

/// Least power of `h` (which must have a fixed point) above the positive `g`.
pub fn dominating_power(h: &LineMap, g: &LineMap, power_bound: i64, scan: &Scan) -> Result<DominatingPower> {
    if h.is_identity() {
        return Err(Error::InvalidInput("h must be nontrivial".into()));
    }
    if fixed_points(h, &scan.search, scan.grid)?.is_empty() {
        return Err(Error::InvalidInput("h must have a fixed point".into()));
    }
    if !is_positive(g)? {
        return Err(Error::InvalidInput("g must be positive".into()));
    }
    let sign = if is_positive(h)? { 1 } else { -1 };
    let g_inv = g.inverse();
    for k in 1..=power_bound {
        let n = sign * k;
        let hn = h.pow(n);
        if is_greater(&hn, g)? {
            let inverse_side = is_greater(&g_inv, &h.pow(-n))?;
            return Ok(DominatingPower { n, inverse_side });
        }
    }
    Err(Error::BoundExhausted(format!(
        "no power of h up to {power_bound} exceeds g; a power must exist when every nontrivial element has at most one fixed point"
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Infinitesimal {
    /// `exact = false` means only `|n| ≤ power_bound` was checked.
    Yes { exact: bool },
    /// `hⁿ ≥ g` or `hⁿ ≤ g⁻¹`.
    No { n: i64 },
}

impl Infinitesimal {
    pub fn is_yes(&self) -> bool {
        matches!(self, Infinitesimal::Yes { .. })
    }
}

/// Membership of `h` in `ℐ(g) = { h : g⁻¹ < hⁿ < g for all n }`.
/// A negative `g` is replaced by its inverse.
pub fn is_infinitesimal(h: &LineMap, g: &LineMap, power_bound: i64) -> Result<Infinitesimal> {
    let g = if is_positive(g)? {
        g.clone()
    } else if is_positive(&g.inverse())? {
        g.inverse()
    } else {
        return Err(Error::InvalidInput("reference element must be positive or negative".into()));
    };
    if let (LineMap::Pl(hp), LineMap::Pl(gp)) = (h, &g) {
        return Ok(infinitesimal_by_germs(germ(hp), germ(gp)));
    }
    let g_inv = g.inverse();
    for k in 1..=power_bound {
        for n in [k, -k] {
            let hn = h.pow(n);
            if !is_greater(&g, &hn)? || !is_greater(&hn, &g_inv)? {
                return Ok(Infinitesimal::No { n });
            }
        }
    }
    Ok(Infinitesimal::Yes { exact: false })
}

fn infinitesimal_by_germs(h: &Affine, g: &Affine) -> Infinitesimal {
    let g_inv = g.inverse();
    let escapes = |p: &Affine| germ_cmp(p, g) != Ordering::Less || germ_cmp(p, &g_inv) != Ordering::Greater;
    if h.slope.is_one() {
        if h.intercept.is_zero() || !g.slope.is_one() {
            return Infinitesimal::Yes { exact: true };
        }
        // both translations at +∞: x + n·t against x ± τ
        let n = (&g.intercept / h.intercept.abs()).ceil();
        let n: i64 = n.to_integer().try_into().unwrap_or(i64::MAX);
        return Infinitesimal::No { n: n.max(1) };
    }
    let mut k = 1i64;
    loop {
        for n in [k, -k] {
            if escapes(&h.pow(n)) {
                return Infinitesimal::No { n };
            }
        }
        k += 1;
    }
}

/// Result of the "at most one fixed point" hypothesis scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum HypothesisVerdict {
    Pass { elements_checked: usize },
    Fail { word: Word, rendered: String, fixed_points: Vec<String> },
}

impl HypothesisVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, HypothesisVerdict::Pass { .. })
    }
}

/// Every nontrivial element of word length ≤ `word_len` has at most one fixed point.
pub fn hypothesis_check(action: &Action, word_len: usize, scan: &Scan) -> Result<HypothesisVerdict> {
    let elements = enumerate_elements(action, word_len);
    hypothesis_check_elements(action, &elements, scan)
}

pub fn hypothesis_check_elements(action: &Action, elements: &[Element], scan: &Scan) -> Result<HypothesisVerdict> {
    let results: Vec<Result<Option<Vec<String>>>> = elements
        .par_iter()
        .map(|e| {
            if e.is_identity() {
                return Ok(None);
            }
            let fp = fixed_points(&e.map, &scan.search, scan.grid)?;
            Ok((fp.count() == FixedCount::AtLeastTwo).then(|| fp.describe()))
        })
        .collect();
    let mut checked = 0;
    for (e, r) in elements.iter().zip(results) {
        if let Some(fixed_points) = r? {
            return Ok(HypothesisVerdict::Fail { word: e.word.clone(), rendered: action.render(&e.word), fixed_points });
        }
        checked += 1;
    }
    Ok(HypothesisVerdict::Pass { elements_checked: checked })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum CommuteClass {
    FreePair,
    CommonFixedPoint { at: Real },
    /// Commuting maps outside the hypothesis class (e.g. a map fixing an interval).
    NoCommonFixedPoint,
    NotCommute { witness: Real },
}

pub fn commute_classify(g: &LineMap, h: &LineMap, scan: &Scan) -> Result<CommuteClass> {
    let gh = g.compose(h);
    let hg = h.compose(g);
    if let Some(witness) = disagreement(&gh, &hg, scan) {
        return Ok(CommuteClass::NotCommute { witness });
    }
    let fg = fixed_points(g, &scan.search, scan.grid)?;
    let fh = fixed_points(h, &scan.search, scan.grid)?;
    let free = |m: &LineMap, empty: bool| empty || m.is_identity();
    if free(g, fg.is_empty()) && free(h, fh.is_empty()) {
        return Ok(CommuteClass::FreePair);
    }
    let candidates: Vec<Real> = fg
        .points
        .iter()
        .cloned()
        .chain(fg.intervals.iter().flat_map(|iv| iv.lo.iter().chain(iv.hi.iter()).cloned().map(Real::Exact)))
        .collect();
    for p in candidates {
        let image = h.eval_real(&p);
        let fixed = match (&image, &p) {
            (Real::Exact(a), Real::Exact(b)) => a == b,
            _ => (image.to_f64() - p.to_f64()).abs() <= scan.tol,
        };
        if fixed {
            return Ok(CommuteClass::CommonFixedPoint { at: p });
        }
    }
    Ok(CommuteClass::NoCommonFixedPoint)
}

fn commutator_map(u: &LineMap, v: &LineMap) -> LineMap {
    u.compose(v).compose(&u.inverse()).compose(&v.inverse())
}

fn is_trivial(m: &LineMap, scan: &Scan) -> bool {
    disagreement(m, &LineMap::identity(), scan).is_none()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AbelianVerdict {
    Abelian { pairs_checked: usize },
    Witness { w1: String, w2: String, commutator: String },
}

/// Generators against every element of word length ≤ `word_len`.
pub fn abelian_check(action: &Action, word_len: usize, scan: &Scan) -> AbelianVerdict {
    let elements = enumerate_elements(action, word_len);
    let mut pairs = 0;
    for (i, g) in action.generators.iter().enumerate() {
        for e in &elements {
            let c = commutator_map(g, &e.map);
            if !is_trivial(&c, scan) {
                return AbelianVerdict::Witness {
                    w1: action.render(&action.generator_word(i)),
                    w2: action.render(&e.word),
                    commutator: c.to_string(),
                };
            }
            pairs += 1;
        }
    }
    AbelianVerdict::Abelian { pairs_checked: pairs }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MetabelianVerdict {
    DerivedLengthAtMost2 { commutators: usize, all_infinitesimal: bool },
    /// Two commutators that do not commute.
    Witness { c1: String, c2: String },
    /// A commutator outside ℐ.
    NotInfinitesimal { commutator: String, n: i64 },
}

impl MetabelianVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, MetabelianVerdict::DerivedLengthAtMost2 { .. })
    }
}

/// Commutators `[u, v]` of elements of length ≤ ⌈word_len / 2⌉ must commute
/// pairwise and lie in ℐ.
pub fn metabelian_check(action: &Action, word_len: usize, power_bound: i64, scan: &Scan) -> Result<MetabelianVerdict> {
    let half = word_len.div_ceil(2);
    let elements = enumerate_elements(action, half);
    let mut comms: Vec<(Word, LineMap)> = Vec::new();
    let mut seen: HashSet<PlMap> = HashSet::new();
    for u in &elements {
        for v in &elements {
            let c = commutator_map(&u.map, &v.map);
            if is_trivial(&c, scan) {
                continue;
            }
            if let LineMap::Pl(p) = &c {
                if !seen.insert(p.clone()) {
                    continue;
                }
            }
            comms.push((Word::commutator(&u.word, &v.word), c));
        }
    }
    let bad = (0..comms.len())
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..comms.len()).map(move |j| (i, j)))
        .find_first(|&(i, j)| !is_trivial(&commutator_map(&comms[i].1, &comms[j].1), scan));
    if let Some((i, j)) = bad {
        return Ok(MetabelianVerdict::Witness {
            c1: action.render(&comms[i].0),
            c2: action.render(&comms[j].0),
        });
    }
    let mut all_infinitesimal = true;
    if let Some(reference) = reference_element(action, word_len, scan)? {
        for (w, c) in &comms {
            match is_infinitesimal(c, &reference.map, power_bound)? {
                Infinitesimal::No { n } => {
                    return Ok(MetabelianVerdict::NotInfinitesimal { commutator: action.render(w), n })
                }
                Infinitesimal::Yes { exact } => all_infinitesimal &= exact,
            }
        }
    }
    Ok(MetabelianVerdict::DerivedLengthAtMost2 { commutators: comms.len(), all_infinitesimal })
}

/// First enumerated element with exactly one fixed point, made positive.
pub fn reference_element(action: &Action, word_len: usize, scan: &Scan) -> Result<Option<Element>> {
    for e in enumerate_elements(action, word_len) {
        if e.is_identity() {
            continue;
        }
        if fixed_points(&e.map, &scan.search, scan.grid)?.count() == FixedCount::One {
            return Ok(Some(if is_positive(&e.map)? {
                e
            } else {
                Element { word: e.word.inverse(), map: e.map.inverse() }
            }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct InfinitesimalSample {
    /// `None` when the sampled group acts freely (then ℐ = G).
    pub reference: Option<String>,
    pub members: Vec<Word>,
    pub rendered: Vec<String>,
    pub elements_considered: usize,
    pub exact: bool,
}

/// Elements of word length ≤ `word_len` lying in ℐ.
pub fn infinitesimal_subgroup_sample(
    action: &Action,
    word_len: usize,
    power_bound: i64,
    scan: &Scan,
) -> Result<InfinitesimalSample> {
    if let HypothesisVerdict::Fail { rendered, fixed_points, .. } = hypothesis_check(action, word_len, scan)? {
        return Err(Error::HypothesisViolated { word: rendered, fixed_points });
    }
    let elements = enumerate_elements(action, word_len);
    let reference = reference_element(action, word_len, scan)?;
    let mut members = Vec::new();
    let mut exact = action.is_pl();
    for e in &elements {
        let inside = match &reference {
            None => true,
            Some(r) => match is_infinitesimal(&e.map, &r.map, power_bound)? {
                Infinitesimal::Yes { exact: ex } => {
                    exact &= ex;
                    true
                }
                Infinitesimal::No { .. } => false,
            },
        };
        if inside {
            members.push(e.word.clone());
        }
    }
    Ok(InfinitesimalSample {
        reference: reference.map(|r| action.render(&r.word)),
        rendered: members.iter().map(|w| action.render(w)).collect(),
        members,
        elements_considered: elements.len(),
        exact,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OrderProperties {
    pub pairs: usize,
    pub trichotomy_failures: usize,
    pub antisymmetry_failures: usize,
    pub bi_invariance_checks: usize,
    pub bi_invariance_failures: usize,
}

impl OrderProperties {
    pub fn passed(&self) -> bool {
        self.trichotomy_failures == 0 && self.antisymmetry_failures == 0 && self.bi_invariance_failures == 0
    }
}

/// Trichotomy, antisymmetry and two-sided invariance of the germ order over
/// all pairs of `elements`, translating by every map in `multipliers`.
pub fn order_properties(elements: &[Element], multipliers: &[Element]) -> Result<OrderProperties> {
    let germs: Vec<&Affine> = elements
        .iter()
        .map(|e| e.map.as_pl().map(germ))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Unsupported("order properties need piecewise-affine elements".into()))?;
    let ks: Vec<(&Affine, &Affine)> = multipliers
        .iter()
        .map(|k| k.map.as_pl().map(|p| (germ(p), germ(p))))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Unsupported("order properties need piecewise-affine multipliers".into()))?;
    let maps: Vec<&PlMap> = elements.iter().map(|e| e.map.as_pl().unwrap()).collect();
    let kmaps: Vec<&PlMap> = multipliers.iter().map(|e| e.map.as_pl().unwrap()).collect();
    let n = elements.len();
    let partial: Vec<OrderProperties> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut p = OrderProperties::default();
            for j in 0..n {
                p.pairs += 1;
                let gh = compare_pl(maps[i], maps[j]);
                let hg = compare_pl(maps[j], maps[i]);
                let (Some(o1), Some(o2)) = (gh.ordering(), hg.ordering()) else {
                    p.trichotomy_failures += 1;
                    continue;
                };
                if o1 != o2.reverse() {
                    p.antisymmetry_failures += 1;
                }
                if o1 != Ordering::Greater {
                    continue;
                }
                for (kidx, (kg, _)) in ks.iter().enumerate() {
                    let _ = kmaps[kidx];
                    p.bi_invariance_checks += 2;
                    let left = germ_cmp(&kg.after(germs[i]), &kg.after(germs[j]));
                    let right = germ_cmp(&germs[i].after(kg), &germs[j].after(kg));
                    if left != Ordering::Greater {
                        p.bi_invariance_failures += 1;
                    }
                    if right != Ordering::Greater {
                        p.bi_invariance_failures += 1;
                    }
                }
            }
            p
        })
        .collect();
    Ok(partial.into_iter().fold(OrderProperties::default(), |mut acc, p| {
        acc.pairs += p.pairs;
        acc.trichotomy_failures += p.trichotomy_failures;
        acc.antisymmetry_failures += p.antisymmetry_failures;
        acc.bi_invariance_checks += p.bi_invariance_checks;
        acc.bi_invariance_failures += p.bi_invariance_failures;
        acc
    }))
}

/// Signed threshold check: both maps evaluated one unit past the witness.
pub fn witness_holds(g: &LineMap, h: &LineMap, result: &OrderResult) -> bool {
    let Some(t) = result.threshold() else { return true };
    let x = match t {
        Real::Exact(v) => Real::Exact(v + q(1)),
        Real::Approx(v) => Real::Approx(v + 1.0),
    };
    let (gx, hx) = (g.eval_real(&x), h.eval_real(&x));
    let ord = match (&gx, &hx) {
        (Real::Exact(a), Real::Exact(b)) => a.cmp(b),
        _ => gx.to_f64().partial_cmp(&hx.to_f64()).unwrap_or(Ordering::Equal),
    };
    match result {
        OrderResult::Greater { .. } => ord == Ordering::Greater,
        OrderResult::Less { .. } => ord == Ordering::Less,
        OrderResult::EventuallyEqual { .. } => ord == Ordering::Equal,
        OrderResult::Equal => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{affine_action, bs12};
    use crate::rational::qr;

    fn aff(s: i64, t: i64) -> LineMap {
        PlMap::affine(q(s), q(t)).unwrap().into()
    }

    fn two_sided(left: i64, right: i64) -> LineMap {
        PlMap::new(vec![q(0)], vec![q(left), q(right)], (q(0), q(0))).unwrap().into()
    }

    #[test]
    fn compare_examples() {
        let a = aff(1, 1);
        assert!(matches!(compare(&a, &LineMap::identity()).unwrap(), OrderResult::Greater { .. }));
        let r = compare(&aff(2, 0), &a).unwrap();
        assert!(matches!(r, OrderResult::Greater { .. }));
        assert!(witness_holds(&aff(2, 0), &a, &r));
        assert!(matches!(compare(&aff(1, 1), &aff(1, 2)).unwrap(), OrderResult::Less { .. }));
        assert_eq!(compare(&a, &a).unwrap(), OrderResult::Equal);
    }

    #[test]
    fn threshold_accounts_for_late_crossings() {
        // 2x and x + 10 cross at 10, far right of any breakpoint
        let (g, h) = (aff(2, 0), aff(1, 10));
        let r = compare(&g, &h).unwrap();
        assert_eq!(r.threshold(), Some(&Real::Exact(q(11))));
        assert!(witness_holds(&g, &h, &r));
    }

    #[test]
    fn smooth_comparison_uses_asymptotic_bounds() {
        let s: LineMap = SmoothMap::sine_translation(0.3, 0.1).unwrap().into();
        let t: LineMap = SmoothMap::sine_translation(1.0, 0.1).unwrap().into();
        let r = compare(&t, &s).unwrap();
        assert!(matches!(r, OrderResult::Greater { .. }));
        assert!(witness_holds(&t, &s, &r));
        let close: LineMap = SmoothMap::sine_translation(0.35, 0.1).unwrap().into();
        assert!(matches!(compare(&close, &s), Err(Error::OrderUndecided { .. })));
        assert!(is_positive(&s.compose(&aff(2, 0))).unwrap());
    }

    #[test]
    fn positivity_examples() {
        let a = aff(1, 1);
        assert!(is_positive(&a).unwrap());
        assert!(!is_positive(&a.inverse()).unwrap());
        assert!(!is_positive(&aff(1, -1)).unwrap());
    }

    #[test]
    fn commensurate_examples() {
        assert_eq!(commensurate(&aff(2, 0), &aff(3, 0), 64).unwrap(), Commensurability::Yes { n: 2, m: 1 });
        assert!(matches!(
            commensurate(&aff(2, 0), &aff(1, 1), 64).unwrap(),
            Commensurability::No { proof: true, .. }
        ));
        // strict inequalities: a⁻³ < a³ < a³ fails, so n = 4
        let a = aff(1, 1);
        assert_eq!(commensurate(&a, &a.pow(3), 64).unwrap(), Commensurability::Yes { n: 4, m: 1 });
    }

    #[test]
    fn dominating_power_examples() {
        let scan = Scan::default();
        let h = aff(2, 0);
        assert_eq!(dominating_power(&h, &aff(1, 5), 64, &scan).unwrap().n, 1);
        assert_eq!(dominating_power(&h, &aff(10, 0), 64, &scan).unwrap().n, 4);
        let d = dominating_power(&h, &aff(3, 0), 64, &scan).unwrap();
        assert_eq!(d.n, 2);
        assert!(d.inverse_side);
        // negative h is raised to negative powers
        assert_eq!(dominating_power(&h.inverse(), &aff(3, 0), 64, &scan).unwrap().n, -2);
        assert!(matches!(dominating_power(&aff(1, 1), &aff(3, 0), 64, &scan), Err(Error::InvalidInput(_))));
        assert!(matches!(dominating_power(&aff(2, 0), &aff(1000, 0), 4, &scan), Err(Error::BoundExhausted(_))));
    }

    #[test]
    fn infinitesimal_examples() {
        assert_eq!(is_infinitesimal(&aff(1, 1), &aff(2, 0), 64).unwrap(), Infinitesimal::Yes { exact: true });
        assert_eq!(is_infinitesimal(&aff(3, 0), &aff(2, 0), 64).unwrap(), Infinitesimal::No { n: 1 });
        assert!(is_infinitesimal(&LineMap::identity(), &aff(1, 1), 64).unwrap().is_yes());
        // translation against a translation reference
        assert_eq!(is_infinitesimal(&aff(1, 1), &aff(1, 3), 64).unwrap(), Infinitesimal::No { n: 3 });
        // negative references are inverted
        assert!(is_infinitesimal(&aff(1, 1), &aff(2, 0).inverse(), 64).unwrap().is_yes());
    }

    #[test]
    fn bounded_infinitesimal_check_on_smooth_maps() {
        let s: LineMap = SmoothMap::sine_translation(0.3, 0.01).unwrap().into();
        let g: LineMap = SmoothMap::affine(2.0, 0.0).unwrap().into();
        assert_eq!(is_infinitesimal(&s, &g, 8).unwrap(), Infinitesimal::Yes { exact: false });
    }

    #[test]
    fn commute_examples() {
        let scan = Scan::default();
        let a = aff(1, 1);
        assert_eq!(commute_classify(&a, &a.pow(2), &scan).unwrap(), CommuteClass::FreePair);
        let g = two_sided(3, 2);
        let h = two_sided(2, 3);
        assert_eq!(
            commute_classify(&g, &h, &scan).unwrap(),
            CommuteClass::CommonFixedPoint { at: Real::Exact(q(0)) }
        );
        assert!(matches!(commute_classify(&a, &aff(2, 0), &scan).unwrap(), CommuteClass::NotCommute { .. }));
    }

    #[test]
    fn hypothesis_examples() {
        let scan = Scan::default();
        assert!(hypothesis_check(&bs12(), 6, &scan).unwrap().passed());
        let twofixed: LineMap =
            PlMap::new(vec![q(0), q(5)], vec![q(2), qr(1, 2), q(2)], (q(0), q(0))).unwrap().into();
        let action = Action::new(vec!["b".into(), "t".into()], vec![aff(2, 0), twofixed]).unwrap();
        match hypothesis_check(&action, 3, &scan).unwrap() {
            HypothesisVerdict::Fail { word, fixed_points, .. } => {
                assert_eq!(word.len(), 1);
                assert_eq!(fixed_points, vec!["0".to_string(), "15/2".to_string()]);
            }
            v => panic!("expected failure, got {v:?}"),
        }
        let single = affine_action(&[(q(1), q(1))]).unwrap();
        assert!(hypothesis_check(&single, 7, &scan).unwrap().passed());
    }

    #[test]
    fn abelian_and_metabelian_examples() {
        let scan = Scan::default();
        match abelian_check(&bs12(), 4, &scan) {
            AbelianVerdict::Witness { w1, w2, commutator } => {
                assert_eq!((w1.as_str(), w2.as_str()), ("a", "b"));
                assert_eq!(commutator, "x ↦ x - 1");
            }
            v => panic!("{v:?}"),
        }
        let meta = metabelian_check(&bs12(), 4, 64, &scan).unwrap();
        assert!(matches!(meta, MetabelianVerdict::DerivedLengthAtMost2 { all_infinitesimal: true, .. }), "{meta:?}");
        let translations = affine_action(&[(q(1), q(1)), (q(1), qr(1, 3))]).unwrap();
        assert!(matches!(abelian_check(&translations, 4, &scan), AbelianVerdict::Abelian { .. }));
        let mult = Action::new(vec!["g".into(), "h".into()], vec![two_sided(3, 2), two_sided(2, 3)]).unwrap();
        assert!(matches!(abelian_check(&mult, 4, &scan), AbelianVerdict::Abelian { .. }));
    }

    #[test]
    fn infinitesimal_sample_examples() {
        let scan = Scan::default();
        let bs = bs12();
        let sample = infinitesimal_subgroup_sample(&bs, 4, 64, &scan).unwrap();
        assert!(sample.reference.is_some());
        for w in &sample.members {
            let m = bs.realize(w);
            let p = m.as_pl().unwrap();
            assert!(p.is_affine() && p.right_germ().slope.is_one());
            let t = &p.right_germ().intercept;
            // dyadic translation
            assert!(t.denom().bits() == t.denom().trailing_zeros().unwrap_or(0) + 1);
        }
        // every translation element is a member
        for e in enumerate_elements(&bs, 4) {
            let slope_one = e.map.as_pl().unwrap().right_germ().slope.is_one();
            assert_eq!(slope_one, sample.members.contains(&e.word));
        }
        let free = affine_action(&[(q(1), q(1)), (q(1), crate::rational::from_f64(2f64.sqrt()).unwrap())]).unwrap();
        let s = infinitesimal_subgroup_sample(&free, 3, 64, &scan).unwrap();
        assert!(s.reference.is_none());
        assert_eq!(s.members.len(), s.elements_considered);
        let single = affine_action(&[(q(2), q(0))]).unwrap();
        let s = infinitesimal_subgroup_sample(&single, 5, 64, &scan).unwrap();
        assert_eq!(s.members, vec![Word::empty()]);
    }
}
