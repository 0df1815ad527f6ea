//! Ground-truth example factory: BS(1,2), affine actions, orbit blow-ups
//! with their collapse maps, and seeded random piecewise-affine actions.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{enumerate_elements, Action, ActionSpec, GeneratorKind, GeneratorSpec};
use crate::error::{Error, Result};
use crate::homeo::{Interval, LineMap, PlMap};
use crate::rational::{format_q, q, qr, serde_q, to_f64, Q};
use crate::regularity::{wandering_check_in, WanderingVerdict};
use crate::word::Word;

/// `a(x) = x + 1`, `b(x) = 2x`.
pub fn bs12() -> Action {
    affine_action(&[(q(1), q(1)), (q(2), q(0))]).expect("valid generators")
}

pub fn bs12_spec() -> ActionSpec {
    let mut spec = bs12().to_spec().expect("pl action");
    spec.name = Some("bs12".into());
    spec
}

/// Generators named `a, b, c, …` for the maps `x ↦ a·x + b`.
pub fn affine_action(pairs: &[(Q, Q)]) -> Result<Action> {
    let mut names = Vec::with_capacity(pairs.len());
    let mut gens = Vec::with_capacity(pairs.len());
    for (i, (a, b)) in pairs.iter().enumerate() {
        if !a.is_positive() {
            return Err(Error::InvalidInput(format!("affine slope must be positive, got {}", format_q(a))));
        }
        names.push(generator_name(i));
        gens.push(LineMap::Pl(PlMap::affine(a.clone(), b.clone())?));
    }
    Action::new(names, gens)
}

fn generator_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("g{i}")
    }
}

/// Width of the interval a boundary gap is squeezed to (and a boundary
/// point is expanded from) where the truncated orbit ends.
pub fn default_squeeze() -> Q {
    qr(1, 1 << 40)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupSpec {
    #[serde(with = "serde_q")]
    pub x_star: Q,
    #[serde(with = "serde_q")]
    pub beta: Q,
    #[serde(with = "serde_q")]
    pub l0: Q,
    pub depth: usize,
    #[serde(with = "serde_q", default = "default_squeeze")]
    pub squeeze: Q,
}

impl BlowupSpec {
    pub fn new(x_star: Q, beta: Q, l0: Q, depth: usize) -> Self {
        Self { x_star, beta, l0, depth, squeeze: default_squeeze() }
    }
}

/// One inserted interval: the blow-up of the orbit point `point = word(x*)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub word: String,
    #[serde(with = "serde_q")]
    pub point: Q,
    pub depth: usize,
    #[serde(with = "serde_q")]
    pub length: Q,
    #[serde(with = "serde_q")]
    pub lo: Q,
    #[serde(with = "serde_q")]
    pub hi: Q,
}

impl Gap {
    pub fn interval(&self) -> Interval {
        Interval::closed(self.lo.clone(), self.hi.clone()).expect("positive gap")
    }
}

/// Monotone piecewise-affine surjection, slope 1 outside its knots; slope 0
/// on collapsed intervals.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Collapse {
    #[serde(with = "serde_q::pairs")]
    pub knots: Vec<(Q, Q)>,
}

impl Collapse {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn eval(&self, x: &Q) -> Q {
        let k = &self.knots;
        if k.is_empty() {
            return x.clone();
        }
        let i = k.partition_point(|(kx, _)| kx <= x);
        if i == 0 {
            return &k[0].1 + (x - &k[0].0);
        }
        if i == k.len() {
            let (lx, ly) = &k[i - 1];
            return ly + (x - lx);
        }
        let ((x0, y0), (x1, y1)) = (&k[i - 1], &k[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let k = &self.knots;
        if k.is_empty() {
            return x;
        }
        let i = k.partition_point(|(kx, _)| to_f64(kx) <= x);
        if i == 0 {
            return to_f64(&k[0].1) + (x - to_f64(&k[0].0));
        }
        if i == k.len() {
            let (lx, ly) = &k[i - 1];
            return to_f64(ly) + (x - to_f64(lx));
        }
        let ((x0, y0), (x1, y1)) = (&k[i - 1], &k[i]);
        let (x0, y0, x1, y1) = (to_f64(x0), to_f64(y0), to_f64(x1), to_f64(y1));
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Maximal intervals on which the map is constant.
    pub fn plateaus(&self) -> Vec<(Q, Q)> {
        self.knots
            .windows(2)
            .filter(|w| w[0].1 == w[1].1)
            .map(|w| (w[0].0.clone(), w[1].0.clone()))
            .collect()
    }
}

/// Sidecar record of how a blown-up action was produced.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub construction: String,
    pub label: String,
    pub base: ActionSpec,
    pub params: BlowupSpec,
    #[serde(with = "serde_q")]
    pub total_gap_length: Q,
    pub gaps: Vec<Gap>,
    pub collapse: Collapse,
}

#[derive(Clone, Debug)]
pub struct Blowup {
    pub base: Action,
    pub action: Action,
    pub collapse: Collapse,
    pub gaps: Vec<Gap>,
    pub spec: BlowupSpec,
}

pub const BLOWUP_LABEL: &str = "C0 orbit blow-up (a semi-conjugate stand-in, not an analytic example)";

struct Orbit {
    /// Sorted orbit points with their depth, gap length and word.
    points: Vec<(Q, usize, Q, Word)>,
    /// Σ of gap lengths left of 0.
    shift: Q,
}

impl Orbit {
    fn find(&self, y: &Q) -> std::result::Result<usize, usize> {
        self.points.binary_search_by(|(p, ..)| p.cmp(y))
    }

    /// Blown coordinate of the left end of the fiber over `y`.
    fn left(&self, y: &Q) -> Q {
        let i = match self.find(y) {
            Ok(i) | Err(i) => i,
        };
        let before: Q = self.points[..i].iter().map(|(_, _, l, _)| l.clone()).sum();
        y + before - &self.shift
    }

    fn gap(&self, i: usize) -> (Q, Q) {
        let lo = self.left(&self.points[i].0);
        let hi = &lo + &self.points[i].2;
        (lo, hi)
    }
}

pub fn blowup(base: &Action, spec: &BlowupSpec) -> Result<Blowup> {
    if !base.is_pl() {
        return Err(Error::Unsupported("blow-ups need a piecewise-affine base action".into()));
    }
    if !(spec.beta.is_positive() && spec.beta < Q::one()) {
        return Err(Error::InvalidInput("beta must lie in (0, 1)".into()));
    }
    if spec.l0.is_negative() {
        return Err(Error::InvalidInput("l0 must be non-negative".into()));
    }
    if spec.l0.is_zero() {
        return Ok(Blowup {
            base: base.clone(),
            action: base.clone(),
            collapse: Collapse::identity(),
            gaps: vec![],
            spec: spec.clone(),
        });
    }
    let orbit = orbit(base, spec)?;
    let eps = &spec.squeeze;
    let half = eps / q(2);
    let mut gens = Vec::with_capacity(base.len());
    for g in &base.generators {
        let g = g.as_pl().expect("pl base");
        let mut cuts: Vec<Q> = orbit.points.iter().map(|(p, ..)| p.clone()).collect();
        cuts.extend(orbit.points.iter().map(|(p, ..)| g.preimage(p)));
        cuts.extend(g.breakpoints().iter().cloned());
        cuts.sort();
        cuts.dedup();
        // sentinels pin both ends back onto the base map
        let (first, last) = (cuts[0].clone() - q(1), cuts[cuts.len() - 1].clone() + q(1));
        cuts.insert(0, first);
        cuts.push(last);
        for w in cuts.windows(2) {
            if &w[1] - &w[0] <= *eps || g.eval(&w[1]) - g.eval(&w[0]) <= *eps {
                return Err(Error::GapsOverlap(format!(
                    "orbit points {} and {} closer than the squeeze width",
                    format_q(&w[0]),
                    format_q(&w[1])
                )));
            }
        }
        let mut knots = Vec::with_capacity(2 * cuts.len());
        for p in &cuts {
            let gp = g.eval(p);
            match (orbit.find(p), orbit.find(&gp)) {
                (Ok(i), Ok(j)) => {
                    let (a, b) = orbit.gap(i);
                    let (c, d) = orbit.gap(j);
                    knots.push((a, c));
                    knots.push((b, d));
                }
                (Ok(i), Err(_)) => {
                    let (a, b) = orbit.gap(i);
                    let z = orbit.left(&gp);
                    knots.push((a, &z - &half));
                    knots.push((b, &z + &half));
                }
                (Err(_), Ok(j)) => {
                    let z = orbit.left(p);
                    let (c, d) = orbit.gap(j);
                    knots.push((&z - &half, c));
                    knots.push((&z + &half, d));
                }
                (Err(_), Err(_)) => knots.push((orbit.left(p), orbit.left(&gp))),
            }
        }
        let map = PlMap::from_knots(&knots, g.left_germ().slope.clone(), g.right_germ().slope.clone())?;
        gens.push(LineMap::Pl(map));
    }
    let action = Action::new(base.names.clone(), gens)?;
    let mut knots = Vec::with_capacity(2 * orbit.points.len());
    let mut gaps = Vec::with_capacity(orbit.points.len());
    for (i, (p, depth, length, word)) in orbit.points.iter().enumerate() {
        let (lo, hi) = orbit.gap(i);
        knots.push((lo.clone(), p.clone()));
        knots.push((hi.clone(), p.clone()));
        gaps.push(Gap { word: base.render(word), point: p.clone(), depth: *depth, length: length.clone(), lo, hi });
    }
    Ok(Blowup { base: base.clone(), action, collapse: Collapse { knots }, gaps, spec: spec.clone() })
}

fn orbit(base: &Action, spec: &BlowupSpec) -> Result<Orbit> {
    let elements = enumerate_elements(base, spec.depth);
    let mut seen: BTreeMap<Q, Word> = BTreeMap::new();
    let mut points = Vec::with_capacity(elements.len());
    for e in &elements {
        let p = e.map.eval_q(&spec.x_star).expect("pl base");
        if let Some(w) = seen.get(&p) {
            let stab = w.inverse().concat(&e.word);
            return Err(Error::NontrivialStabilizer { word: base.render(&stab) });
        }
        seen.insert(p.clone(), e.word.clone());
        let depth = e.word.len();
        let length = &spec.l0 * num_traits::pow(spec.beta.clone(), depth);
        points.push((p, depth, length, e.word.clone()));
    }
    points.sort_by(|a, b| a.0.cmp(&b.0));
    let shift = points.iter().filter(|(p, ..)| p < &Q::zero()).map(|(_, _, l, _)| l.clone()).sum();
    Ok(Orbit { points, shift })
}

impl Provenance {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::InvalidInput(format!("malformed provenance at line {} column {}: {e}", e.line(), e.column()))
        })
    }
}

impl Blowup {
    pub fn total_gap_length(&self) -> Q {
        self.gaps.iter().map(|g| g.length.clone()).sum()
    }

    pub fn gap_at(&self, point: &Q) -> Option<&Gap> {
        self.gaps.iter().find(|g| &g.point == point)
    }

    pub fn provenance(&self) -> Result<Provenance> {
        Ok(Provenance {
            construction: "blowup".into(),
            label: BLOWUP_LABEL.into(),
            base: self.base.to_spec()?,
            params: self.spec.clone(),
            total_gap_length: self.total_gap_length(),
            gaps: self.gaps.clone(),
            collapse: self.collapse.clone(),
        })
    }

    pub fn spec_json(&self) -> Result<ActionSpec> {
        let mut spec = self.action.to_spec()?;
        spec.name = Some(format!("blowup(x*={}, depth={})", format_q(&self.spec.x_star), self.spec.depth));
        Ok(spec)
    }

    /// `w(J) ∩ J = ∅` for every nontrivial reduced word of length ≤ `word_len`.
    ///
    /// Each letter moves orbit depth by at most one, so words up to
    /// `depth − depth(J)` keep every intermediate image inside the truncated
    /// orbit. Longer words are refused.
    pub fn certify_gap_wandering(&self, gap: &Gap, word_len: usize) -> Result<WanderingVerdict> {
        let horizon = self.spec.depth.saturating_sub(gap.depth);
        if word_len > horizon {
            return Err(Error::InvalidInput(format!(
                "certificate length {word_len} exceeds truncation horizon {horizon}"
            )));
        }
        wandering_check_in(&self.action, &self.base, &gap.interval(), word_len)
    }

    /// Largest `|θ₀(G(x)) − g(θ₀(x))|` over the knots of every blown generator
    /// and the given sample points.
    pub fn intertwining_defect(&self, samples: &[Q]) -> Q {
        let mut worst = Q::zero();
        for (g, b) in self.action.generators.iter().zip(&self.base.generators) {
            let (g, b) = (g.as_pl().unwrap(), b.as_pl().unwrap());
            for x in g.breakpoints().iter().chain(samples) {
                let lhs = self.collapse.eval(&g.eval(x));
                let rhs = b.eval(&self.collapse.eval(x));
                let d = (lhs - rhs).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }
}

/// Constraints imposed generator by generator.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RandomConstraints {
    #[serde(default)]
    pub fixed_points_in: Option<Interval>,
    #[serde(default)]
    pub max_fixed_points: Option<usize>,
}

pub const REJECTION_BUDGET: usize = 10_000;

fn slope_pool() -> Vec<Q> {
    [(1, 4), (1, 3), (1, 2), (2, 3), (1, 1), (3, 2), (2, 1), (3, 1), (4, 1)]
        .iter()
        .map(|&(n, d)| qr(n, d))
        .collect()
}

fn satisfies(f: &PlMap, c: &RandomConstraints) -> bool {
    if f.is_identity() {
        return false;
    }
    let (points, intervals) = f.fixed_points();
    if let Some(m) = c.max_fixed_points {
        if !intervals.is_empty() || points.len() > m {
            return false;
        }
    }
    if let Some(win) = &c.fixed_points_in {
        if !points.iter().all(|p| win.contains(p)) {
            return false;
        }
        let inside = |e: &Option<Q>| e.as_ref().is_some_and(|x| win.contains(x));
        if !intervals.iter().all(|iv| inside(&iv.lo) && inside(&iv.hi)) {
            return false;
        }
    }
    true
}

/// Breakpoints on the grid `k/8 ⊂ [-4, 4]`, slopes from a fixed pool,
/// anchor `(0, k/8)`; deterministic in `seed`.
pub fn random_pl_action(
    seed: u64,
    n_generators: usize,
    n_breakpoints: usize,
    constraints: &RandomConstraints,
) -> Result<ActionSpec> {
    if n_breakpoints > 64 {
        return Err(Error::InvalidInput("at most 64 breakpoints fit the grid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = slope_pool();
    let grid: Vec<i64> = (-32..=32).collect();
    let mut generators = Vec::with_capacity(n_generators);
    for i in 0..n_generators {
        let mut found = None;
        for _ in 0..REJECTION_BUDGET {
            let mut ks: Vec<i64> = grid.choose_multiple(&mut rng, n_breakpoints).copied().collect();
            ks.sort_unstable();
            let breakpoints: Vec<Q> = ks.iter().map(|&k| qr(k, 8)).collect();
            let slopes: Vec<Q> = (0..=n_breakpoints).map(|_| pool.choose(&mut rng).unwrap().clone()).collect();
            let anchor = (q(0), qr(rng.gen_range(-32..=32), 8));
            let f = PlMap::new(breakpoints, slopes, anchor)?;
            if satisfies(&f, constraints) {
                found = Some(f);
                break;
            }
        }
        let f = found.ok_or(Error::RejectionBudget(REJECTION_BUDGET))?;
        let (breakpoints, slopes, anchor) = f.to_parts();
        generators.push(GeneratorSpec {
            name: format!("g{i}"),
            kind: GeneratorKind::Pl { breakpoints, slopes, anchor },
        });
    }
    Ok(ActionSpec {
        name: Some(format!("random(seed={seed})")),
        generators,
        torsion_free: None,
        rational_scaling: BTreeMap::new(),
    })
}
