//! Theorem suites and the JSON/CSV reports behind the command-line tool.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::action::{enumerate_elements, Action, ActionSpec};
use crate::circle::{circle_dichotomy_check, CircleAction, CircleVerdict};
use crate::constructions::{Provenance, BLOWUP_LABEL};
use crate::error::{Error, Result};
use crate::homeo::{fixed_points, FixedCount, Interval, LineMap, Real, Scan};
use crate::measure::{
    kernel_dichotomy_sample, phi, scaling_factor, semiconjugacy_residual, theta_fiber_scan, translation_number,
    uniform_grid, default_probe, Measure,
};
use crate::order::{
    abelian_check, compare_pl, germ, hypothesis_check, infinitesimal_subgroup_sample, metabelian_check,
    order_properties, AbelianVerdict, HypothesisVerdict,
};
use crate::rational::{format_q, q, qr, Q};
use crate::regularity::{
    conjugacy_contrast_report, distortion_sum_check, fiber_candidates, wandering_check_in, wandering_interval_search,
};
use crate::word::Word;

pub const TOOL: &str = "line-actions";
/// θ is sampled and scanned over this window.
pub const THETA_WINDOW: (f64, f64) = (-4.0, 4.0);
pub const RESIDUAL_POINTS: usize = 1000;
pub const HOMOMORPHISM_PAIRS: usize = 100;
/// Increments of θ at or below this count as a flat stretch.
pub const FIBER_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub words_max_len: usize,
    pub power_bound: i64,
    pub grid: usize,
    pub tol: f64,
    pub seed: u64,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { words_max_len: 6, power_bound: 64, grid: 4096, tol: 1e-9, seed: 0, format: Format::Json }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.words_max_len == 0 || self.power_bound <= 0 || self.grid < 2 || !(self.tol > 0.0) {
            return Err(Error::InvalidInput("bounds must be positive".into()));
        }
        Ok(())
    }

    pub fn scan(&self) -> Scan {
        Scan { grid: self.grid, tol: self.tol, ..Scan::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// The theorem's hypotheses do not apply to this action.
    Skipped,
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub params: Value,
    pub verdict: Verdict,
    pub witnesses: Vec<Value>,
    pub details: Value,
}

impl Check {
    fn new(check: &str, params: Value, verdict: Verdict, witnesses: Vec<Value>, details: Value) -> Self {
        Self { check: check.into(), params, verdict, witnesses, details }
    }

    fn skipped(check: &str, reason: impl Into<String>) -> Self {
        Self::new(check, Value::Null, Verdict::Skipped, vec![], json!({ "reason": reason.into() }))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input: Option<String>,
    pub spec_hash: String,
    pub config: RunConfig,
    pub labels: Vec<String>,
    pub verdict: Verdict,
    pub checks: Vec<Check>,
    pub details: Value,
    /// Wall-clock milliseconds per check; the only nondeterministic field.
    pub timing: BTreeMap<String, u64>,
}

impl Report {
    pub fn new(command: &str, input: Option<String>, spec_hash: String, config: &RunConfig) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            input,
            spec_hash,
            config: config.clone(),
            labels: vec![],
            verdict: Verdict::Pass,
            checks: vec![],
            details: Value::Null,
            timing: BTreeMap::new(),
        }
    }

    fn add(&mut self, timed: Vec<(Check, u64)>) {
        for (c, ms) in timed {
            self.timing.insert(c.check.clone(), ms);
            self.checks.push(c);
        }
        self.checks.sort_by(|a, b| a.check.cmp(&b.check));
        self.verdict = if self.checks.iter().any(|c| c.verdict == Verdict::Fail) { Verdict::Fail } else { Verdict::Pass };
    }

    pub fn exit_code(&self) -> i32 {
        if self.verdict == Verdict::Fail {
            1
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# line-actions checks v1")?;
        writeln!(w, "check,verdict,witnesses")?;
        for c in &self.checks {
            let wit = serde_json::to_string(&c.witnesses).expect("serializable").replace('"', "\"\"");
            writeln!(w, "{},{},\"{}\"", c.check, serde_json::to_value(c.verdict).unwrap().as_str().unwrap(), wit)?;
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// An action spec together with whatever is known about how it was built.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub spec: ActionSpec,
    pub action: Action,
    pub provenance: Option<Provenance>,
    pub hash: String,
}

impl Loaded {
    pub fn from_text(text: &str, provenance: Option<&str>) -> Result<Self> {
        let spec = ActionSpec::from_json(text)?;
        let action = Action::from_spec(&spec)?;
        let provenance = provenance.map(Provenance::from_json).transpose()?;
        Ok(Self { spec, action, provenance, hash: sha256_hex(text.as_bytes()) })
    }

    /// Exact measures only: Lebesgue for affine actions, the pullback for
    /// constructed blow-ups.
    pub fn measure(&self) -> Option<Measure> {
        if let Some(p) = &self.provenance {
            return Some(Measure::pullback(p.collapse.clone()));
        }
        let affine = self.action.generators.iter().all(|g| match g {
            LineMap::Pl(p) => p.is_affine(),
            LineMap::Smooth(crate::homeo::SmoothMap::Affine { .. }) => true,
            _ => false,
        });
        affine.then(Measure::lebesgue)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Holder,
    Affine,
    Circle,
    C2,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "holder" => Suite::Holder,
            "affine" => Suite::Affine,
            "circle" => Suite::Circle,
            "c2" => Suite::C2,
            "all" => Suite::All,
            other => return Err(Error::InvalidInput(format!("unknown suite {other}"))),
        })
    }
}

fn timed(f: impl FnOnce() -> Check) -> (Check, u64) {
    let t = Instant::now();
    let c = f();
    (c, t.elapsed().as_millis() as u64)
}

fn error_check(name: &str, e: Error) -> Check {
    let verdict = match e {
        Error::HypothesisViolated { .. } => Verdict::Fail,
        Error::Unsupported(_) | Error::UnboundedSearch => Verdict::Skipped,
        _ => Verdict::Fail,
    };
    Check::new(name, Value::Null, verdict, vec![json!(e.to_string())], Value::Null)
}

fn guard(name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| error_check(name, e))
}

type Job<'a> = Box<dyn FnOnce() -> Check + Send + 'a>;

pub fn run_verify(loaded: &Loaded, suite: Suite, config: &RunConfig, input: Option<String>) -> Report {
    let mut report = Report::new("verify", input, loaded.hash.clone(), config);
    let circle = CircleAction::from_action(&loaded.action, &config.scan());
    let mut jobs: Vec<Job> = Vec::new();
    if matches!(suite, Suite::Holder | Suite::All) {
        jobs.extend(holder_jobs(loaded, config));
    }
    if matches!(suite, Suite::Affine | Suite::All) {
        jobs.extend(affine_jobs(loaded, config));
    }
    if matches!(suite, Suite::C2 | Suite::All) {
        jobs.extend(c2_jobs(loaded, config));
    }
    if suite == Suite::Circle || (suite == Suite::All && circle.is_lifts()) {
        let circle = circle.clone();
        jobs.push(Box::new(move || circle_check(loaded, &circle, config)));
    }
    if loaded.provenance.is_some() {
        report.labels.push(BLOWUP_LABEL.into());
    }
    if let Some(t) = loaded.spec.torsion_free {
        report.labels.push(format!("torsion_free declared: {t}"));
    }
    let mut done: Vec<(Check, u64)> = jobs.into_par_iter().map(timed).collect();
    gate_on_hypothesis(&mut done);
    report.add(done);
    report
}

/// A theorem says nothing about actions outside its hypothesis: once
/// `<suite>.hypothesis` fails, the suite's other failures become skips.
fn gate_on_hypothesis(done: &mut [(Check, u64)]) {
    let failed: Vec<String> = done
        .iter()
        .filter(|(c, _)| c.check.ends_with(".hypothesis") && c.verdict == Verdict::Fail)
        .map(|(c, _)| c.check.trim_end_matches("hypothesis").to_string())
        .collect();
    for (c, _) in done.iter_mut() {
        let Some(prefix) = failed.iter().find(|p| c.check.starts_with(p.as_str())) else { continue };
        if c.verdict == Verdict::Fail && !c.check.ends_with(".hypothesis") {
            c.verdict = Verdict::Skipped;
            c.details = json!({
                "reason": format!("{prefix}hypothesis fails"),
                "observed": std::mem::take(&mut c.witnesses),
            });
        }
    }
}

fn hypothesis_job(name: &'static str, loaded: &Loaded, config: &RunConfig) -> Check {
    let params = json!({ "word_len": config.words_max_len });
    guard(name, || {
        Ok(match hypothesis_check(&loaded.action, config.words_max_len, &config.scan())? {
            HypothesisVerdict::Pass { elements_checked } => {
                Check::new(name, params, Verdict::Pass, vec![], json!({ "elements_checked": elements_checked }))
            }
            HypothesisVerdict::Fail { word, rendered, fixed_points } => Check::new(
                name,
                params,
                Verdict::Fail,
                vec![json!({ "word": rendered, "word_len": word.len(), "fixed_points": fixed_points })],
                Value::Null,
            ),
        })
    })
}

fn holder_jobs<'a>(loaded: &'a Loaded, config: &'a RunConfig) -> Vec<Job<'a>> {
    vec![
        Box::new(move || hypothesis_job("holder.hypothesis", loaded, config)),
        Box::new(move || guard("holder.one_fixed_point", || one_fixed_point(loaded, config))),
        Box::new(move || guard("holder.bounded_fixed_sets", || bounded_fixed_sets(loaded, config))),
    ]
}

fn abelian_verdict(action: &Action, config: &RunConfig) -> (bool, Vec<Value>) {
    match abelian_check(action, config.words_max_len, &config.scan()) {
        AbelianVerdict::Abelian { .. } => (true, vec![]),
        AbelianVerdict::Witness { w1, w2, commutator } => {
            (false, vec![json!({ "w1": w1, "w2": w2, "commutator": commutator })])
        }
    }
}

/// Every sampled nontrivial element has exactly one fixed point ⇒ abelian.
fn one_fixed_point(loaded: &Loaded, config: &RunConfig) -> Result<Check> {
    let name = "holder.one_fixed_point";
    let scan = config.scan();
    for e in enumerate_elements(&loaded.action, config.words_max_len) {
        if e.is_identity() {
            continue;
        }
        if fixed_points(&e.map, &scan.search, scan.grid)?.count() != FixedCount::One {
            return Ok(Check::skipped(
                name,
                format!("{} does not have exactly one fixed point", loaded.action.render(&e.word)),
            ));
        }
    }
    let (abelian, witnesses) = abelian_verdict(&loaded.action, config);
    let verdict = if abelian { Verdict::Pass } else { Verdict::Fail };
    Ok(Check::new(name, json!({ "word_len": config.words_max_len }), verdict, witnesses, Value::Null))
}

/// Fixed sets inside one bounded interval (the hull of the generators'
/// fixed points) ⇒ abelian.
fn bounded_fixed_sets(loaded: &Loaded, config: &RunConfig) -> Result<Check> {
    let name = "holder.bounded_fixed_sets";
    let scan = config.scan();
    let mut hull: Option<(Q, Q)> = None;
    for g in &loaded.action.generators {
        if !g.is_exact() {
            return Ok(Check::skipped(name, "fixed-set containment is only decided exactly"));
        }
        let f = fixed_points(g, &scan.search, scan.grid)?;
        let ends = f.points.iter().filter_map(|p| if let Real::Exact(v) = p { Some(v.clone()) } else { None }).chain(
            f.intervals.iter().flat_map(|iv| iv.lo.iter().chain(iv.hi.iter()).cloned()),
        );
        for v in ends {
            hull = Some(match hull {
                None => (v.clone(), v),
                Some((lo, hi)) => (lo.min(v.clone()), hi.max(v)),
            });
        }
    }
    let Some((c, d)) = hull else {
        return Ok(Check::skipped(name, "no generator has a fixed point"));
    };
    for e in enumerate_elements(&loaded.action, config.words_max_len) {
        if e.is_identity() {
            continue;
        }
        let f = fixed_points(&e.map, &scan.search, scan.grid)?;
        if !f.all_within(&c, &d) {
            return Ok(Check::skipped(
                name,
                format!(
                    "{} has fixed points {:?} outside [{}, {}]",
                    loaded.action.render(&e.word),
                    f.describe(),
                    format_q(&c),
                    format_q(&d)
                ),
            ));
        }
    }
    let (abelian, witnesses) = abelian_verdict(&loaded.action, config);
    let verdict = if abelian { Verdict::Pass } else { Verdict::Fail };
    let params = json!({ "word_len": config.words_max_len, "interval": [format_q(&c), format_q(&d)] });
    Ok(Check::new(name, params, verdict, witnesses, Value::Null))
}

fn no_measure(name: &str) -> Check {
    Check::skipped(name, "no exact quasi-invariant measure for this action (affine generators or a blow-up provenance needed)")
}

fn affine_jobs<'a>(loaded: &'a Loaded, config: &'a RunConfig) -> Vec<Job<'a>> {
    let mut jobs: Vec<Job<'a>> = vec![
        Box::new(move || hypothesis_job("affine.hypothesis", loaded, config)),
        Box::new(move || {
            let (abelian, witnesses) = abelian_verdict(&loaded.action, config);
            Check::new("affine.abelian", json!({ "word_len": config.words_max_len }), Verdict::Info, witnesses, json!({ "abelian": abelian }))
        }),
        Box::new(move || {
            guard("affine.metabelian", || {
                let v = metabelian_check(&loaded.action, config.words_max_len, config.power_bound, &config.scan())?;
                let verdict = if v.passed() { Verdict::Pass } else { Verdict::Fail };
                let witnesses = if v.passed() { vec![] } else { vec![serde_json::to_value(&v).unwrap()] };
                Ok(Check::new("affine.metabelian", json!({ "word_len": config.words_max_len }), verdict, witnesses, serde_json::to_value(&v).unwrap()))
            })
        }),
        Box::new(move || {
            guard("affine.infinitesimals", || {
                let s = infinitesimal_subgroup_sample(&loaded.action, config.words_max_len.min(4), config.power_bound, &config.scan())?;
                Ok(Check::new("affine.infinitesimals", json!({ "word_len": config.words_max_len.min(4) }), Verdict::Info, vec![], serde_json::to_value(&s).unwrap()))
            })
        }),
    ];
    let Some(mu) = loaded.measure() else {
        for name in ["affine.phi", "affine.homomorphism", "affine.kernel_dichotomy", "affine.residual"] {
            jobs.push(Box::new(move || no_measure(name)));
        }
        return jobs;
    };
    let mu2 = mu.clone();
    let mu3 = mu.clone();
    let mu4 = mu.clone();
    jobs.push(Box::new(move || guard("affine.phi", || phi_check(loaded, &mu))));
    jobs.push(Box::new(move || guard("affine.homomorphism", || homomorphism_check(loaded, &mu2, config))));
    jobs.push(Box::new(move || {
        guard("affine.kernel_dichotomy", || {
            let len = config.words_max_len.min(4);
            let rows = kernel_dichotomy_sample(&mu3, &loaded.action, len, &config.scan())?;
            let bad: Vec<Value> = rows.iter().filter(|r| !r.consistent).map(|r| serde_json::to_value(r).unwrap()).collect();
            let verdict = if bad.is_empty() { Verdict::Pass } else { Verdict::Fail };
            Ok(Check::new("affine.kernel_dichotomy", json!({ "word_len": len }), verdict, bad, json!({ "elements": rows.len() })))
        })
    }));
    jobs.push(Box::new(move || {
        guard("affine.residual", || {
            let grid = uniform_grid(THETA_WINDOW.0, THETA_WINDOW.1, RESIDUAL_POINTS);
            let r = semiconjugacy_residual(&mu4, &loaded.action, &grid)?;
            let verdict = if r.max <= config.tol { Verdict::Pass } else { Verdict::Fail };
            let witnesses = if verdict == Verdict::Fail { vec![json!({ "generator": r.generator, "x": r.at, "residual": r.max })] } else { vec![] };
            Ok(Check::new("affine.residual", json!({ "points": RESIDUAL_POINTS, "window": THETA_WINDOW, "measure": mu4.name() }), verdict, witnesses, serde_json::to_value(&r).unwrap()))
        })
    }));
    jobs
}

fn phi_check(loaded: &Loaded, mu: &Measure) -> Result<Check> {
    let mut table = serde_json::Map::new();
    for (name, g) in loaded.action.names.iter().zip(&loaded.action.generators) {
        table.insert(name.clone(), serde_json::to_value(phi(mu, g)?).unwrap());
    }
    Ok(Check::new(
        "affine.phi",
        json!({ "measure": mu.name(), "normalization": mu.normalization() }),
        Verdict::Pass,
        vec![],
        Value::Object(table),
    ))
}

fn homomorphism_check(loaded: &Loaded, mu: &Measure, config: &RunConfig) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = loaded.action.len();
    let mut worst: f64 = 0.0;
    let mut witnesses = Vec::new();
    let mut exact = true;
    for _ in 0..HOMOMORPHISM_PAIRS {
        let w1 = Word::random(&mut rng, n, config.words_max_len);
        let w2 = Word::random(&mut rng, n, config.words_max_len);
        let lhs = phi(mu, &loaded.action.realize(&w1.concat(&w2)))?;
        let rhs = phi(mu, &loaded.action.realize(&w1))?.compose(&phi(mu, &loaded.action.realize(&w2))?);
        exact &= lhs.is_exact() && rhs.is_exact();
        let d = lhs.distance(&rhs);
        worst = worst.max(d);
        if d > config.tol && witnesses.is_empty() {
            witnesses.push(json!({ "w1": loaded.action.render(&w1), "w2": loaded.action.render(&w2), "lhs": lhs.to_string(), "rhs": rhs.to_string() }));
        }
    }
    let verdict = if witnesses.is_empty() { Verdict::Pass } else { Verdict::Fail };
    Ok(Check::new(
        "affine.homomorphism",
        json!({ "pairs": HOMOMORPHISM_PAIRS, "seed": config.seed, "word_len": config.words_max_len }),
        verdict,
        witnesses,
        json!({ "max_distance": worst, "exact": exact }),
    ))
}

fn c2_jobs<'a>(loaded: &'a Loaded, config: &'a RunConfig) -> Vec<Job<'a>> {
    vec![
        Box::new(move || guard("c2.wandering", || wandering_inventory(loaded, config))),
        Box::new(move || contrast_check(loaded, config)),
        Box::new(move || guard("c2.distortion", || distortion_check(loaded, config))),
    ]
}

fn wandering_inventory(loaded: &Loaded, config: &RunConfig) -> Result<Check> {
    let name = "c2.wandering";
    let Some(p) = &loaded.provenance else {
        let Some(mu) = loaded.measure() else {
            return Ok(no_measure(name));
        };
        let scan = theta_fiber_scan(&mu, THETA_WINDOW.0, THETA_WINDOW.1, config.grid, FIBER_TOL);
        let search = wandering_interval_search(&loaded.action, config.words_max_len, &fiber_candidates(&scan)?)?;
        return Ok(Check::new(
            name,
            json!({ "word_len": config.words_max_len, "candidates": "theta fibers" }),
            Verdict::Info,
            vec![],
            serde_json::to_value(&search).unwrap(),
        ));
    };
    let depth = p.params.depth;
    let base = Action::from_spec(&p.base)?;
    let rows: Vec<Result<Value>> = p
        .gaps
        .par_iter()
        .map(|g| {
            let len = config.words_max_len.min(depth.saturating_sub(g.depth));
            let iv = Interval::closed(g.lo.clone(), g.hi.clone())?;
            let v = wandering_check_in(&loaded.action, &base, &iv, len)?;
            Ok(json!({ "word": g.word, "point": format_q(&g.point), "length": format_q(&g.length), "word_len": len, "certificate": v }))
        })
        .collect();
    let rows: Vec<Value> = rows.into_iter().collect::<Result<_>>()?;
    let failures: Vec<Value> =
        rows.iter().filter(|r| r["certificate"]["verdict"] != "wandering").cloned().collect();
    let verdict = if failures.is_empty() { Verdict::Pass } else { Verdict::Fail };
    Ok(Check::new(name, json!({ "word_len": config.words_max_len, "candidates": "inserted gaps" }), verdict, failures, json!({ "gaps": rows })))
}

fn contrast_check(loaded: &Loaded, config: &RunConfig) -> Check {
    let name = "c2.contrast";
    let Some(mu) = loaded.measure() else {
        return no_measure(name);
    };
    let params = json!({ "window": THETA_WINDOW, "grid": config.grid });
    if loaded.provenance.is_some() {
        let r = conjugacy_contrast_report(&Measure::lebesgue(), &mu, THETA_WINDOW, config.grid, FIBER_TOL);
        let verdict = if r.holds { Verdict::Pass } else { Verdict::Fail };
        return Check::new(name, params, verdict, vec![], serde_json::to_value(&r).unwrap());
    }
    let r = conjugacy_contrast_report(&mu, &mu, THETA_WINDOW, config.grid, FIBER_TOL);
    let ok = r.c2.fibers == 0 && r.c2.refined_fibers == 0;
    let witnesses = if ok { vec![] } else { vec![json!({ "fibers": r.c2.fiber_lengths })] };
    Check::new(name, params, if ok { Verdict::Pass } else { Verdict::Fail }, witnesses, serde_json::to_value(&r.c2).unwrap())
}

fn distortion_check(loaded: &Loaded, config: &RunConfig) -> Result<Check> {
    let name = "c2.distortion";
    let j = Interval::closed(q(0), qr(1, 10))?;
    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    for (n, g) in loaded.action.names.iter().zip(&loaded.action.generators) {
        let LineMap::Smooth(s) = g else { continue };
        if matches!(s, crate::homeo::SmoothMap::Affine { .. }) {
            continue;
        }
        let reports = distortion_sum_check(g, &j, 50, config.grid)?;
        let min_margin = reports.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        if let Some(bad) = reports.iter().find(|r| !r.passed()) {
            witnesses.push(json!({ "generator": n, "report": bad }));
        }
        rows.push(json!({ "generator": n, "min_margin": min_margin, "c": reports[0].c }));
    }
    if rows.is_empty() {
        return Ok(Check::skipped(name, "no non-affine C² generator"));
    }
    let verdict = if witnesses.is_empty() { Verdict::Pass } else { Verdict::Fail };
    Ok(Check::new(name, json!({ "j": ["0", "1/10"], "n_max": 50 }), verdict, witnesses, json!(rows)))
}

fn circle_check(loaded: &Loaded, circle: &CircleAction, config: &RunConfig) -> Check {
    let name = "circle.dichotomy";
    let params = json!({
        "word_len": config.words_max_len,
        "model": if circle.is_lifts() { "lifts" } else { "one-point compactification" },
        "torsion_free": loaded.spec.torsion_free,
    });
    match circle_dichotomy_check(circle, config.words_max_len, &config.scan()) {
        Err(e) => error_check(name, e),
        Ok(v) => {
            let verdict = match v {
                CircleVerdict::FreeAbelian { .. } | CircleVerdict::GlobalFixedPoint { .. } => Verdict::Pass,
                _ => Verdict::Fail,
            };
            let witnesses = if verdict == Verdict::Fail { vec![serde_json::to_value(&v).unwrap()] } else { vec![] };
            Check::new(name, params, verdict, witnesses, serde_json::to_value(&v).unwrap())
        }
    }
}

/// Order table, ℐ sample, and per-generator `A`, `τ`, `φ`.
pub fn run_analyze(loaded: &Loaded, config: &RunConfig, input: Option<String>) -> Report {
    let mut report = Report::new("analyze", input, loaded.hash.clone(), config);
    if loaded.provenance.is_some() {
        report.labels.push(BLOWUP_LABEL.into());
    }
    let jobs: Vec<Job> = vec![
        Box::new(|| guard("analyze.order", || order_table(loaded, config))),
        Box::new(|| {
            guard("analyze.infinitesimals", || {
                let s = infinitesimal_subgroup_sample(&loaded.action, config.words_max_len.min(4), config.power_bound, &config.scan())?;
                Ok(Check::new("analyze.infinitesimals", json!({ "word_len": config.words_max_len.min(4) }), Verdict::Info, vec![], serde_json::to_value(&s).unwrap()))
            })
        }),
        Box::new(|| guard("analyze.generators", || generator_table(loaded))),
    ];
    let done: Vec<(Check, u64)> = jobs.into_par_iter().map(timed).collect();
    report.add(done);
    report
}

fn order_table(loaded: &Loaded, config: &RunConfig) -> Result<Check> {
    let name = "analyze.order";
    if !loaded.action.is_pl() {
        return Ok(Check::skipped(name, "germ table needs piecewise-affine generators"));
    }
    let len = config.words_max_len.min(2);
    let mut elements = enumerate_elements(&loaded.action, len);
    elements.sort_by(|a, b| {
        let (ga, gb) = (a.map.as_pl().unwrap(), b.map.as_pl().unwrap());
        compare_pl(ga, gb).ordering().unwrap_or(std::cmp::Ordering::Equal)
    });
    let rows: Vec<Value> = elements
        .iter()
        .map(|e| {
            let g = germ(e.map.as_pl().unwrap());
            json!({ "word": loaded.action.render(&e.word), "germ": [format_q(&g.slope), format_q(&g.intercept)] })
        })
        .collect();
    let props = order_properties(&elements, &enumerate_elements(&loaded.action, 1))?;
    let sorted = elements.windows(2).all(|w| {
        let (a, b) = (germ(w[0].map.as_pl().unwrap()), germ(w[1].map.as_pl().unwrap()));
        crate::order::germ_cmp(a, b) != std::cmp::Ordering::Greater
    });
    let verdict = if props.passed() && sorted { Verdict::Pass } else { Verdict::Fail };
    Ok(Check::new(name, json!({ "word_len": len }), verdict, vec![], json!({ "ascending": rows, "properties": props })))
}

fn generator_table(loaded: &Loaded) -> Result<Check> {
    let name = "analyze.generators";
    let mu = match loaded.measure() {
        Some(m) => m,
        None => {
            let free = loaded.action.generators.iter().find(|g| {
                fixed_points(g, &Scan::default().search, 4096).map(|f| f.is_empty()).unwrap_or(false)
            });
            match free {
                Some(h) => Measure::empirical(&loaded.action, h, 0.0, 100_000, 0)?,
                None => return Ok(Check::skipped(name, "no measure available")),
            }
        }
    };
    let mut rows = serde_json::Map::new();
    for (n, g) in loaded.action.names.iter().zip(&loaded.action.generators) {
        let a = scaling_factor(&mu, g, &default_probe()).map(|s| s.value);
        let tau = translation_number(&mu, g, &Real::Exact(Q::from_integer(0.into()))).map(|t| t.value);
        let p = phi(&mu, g);
        rows.insert(
            n.clone(),
            json!({
                "A": a.map(|v| json!(v)).unwrap_or_else(|e| json!(e.to_string())),
                "tau": tau.map(|v| json!(v)).unwrap_or_else(|e| json!(e.to_string())),
                "phi": p.map(|v| serde_json::to_value(v).unwrap()).unwrap_or_else(|e| json!(e.to_string())),
            }),
        );
    }
    let mut details = json!({ "measure": mu.name(), "normalization": mu.normalization(), "generators": rows });
    if let crate::measure::Backend::Empirical(e) = &mu.backend {
        details["error_bar"] = json!(e.error_bar);
    }
    Ok(Check::new(name, Value::Null, Verdict::Info, vec![], details))
}

pub fn write_theta_csv(w: &mut impl Write, mu: &Measure, grid: usize) -> Result<()> {
    writeln!(w, "# line-actions theta v1 measure={}", mu.name())?;
    writeln!(w, "x,theta")?;
    for x in uniform_grid(THETA_WINDOW.0, THETA_WINDOW.1, grid) {
        writeln!(w, "{x},{}", mu.theta(x))?;
    }
    Ok(())
}

/// Wraps an exact value for reports.
pub fn q_json(v: &Q) -> Value {
    json!(format_q(v))
}
