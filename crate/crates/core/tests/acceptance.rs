//! Acceptance suite. One PASS/FAIL line per criterion; nonzero exit on any FAIL.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use line_actions::action::{enumerate_elements, Action};
use line_actions::circle::{
    circle_dichotomy_check, denjoy_approximant, rotation_number, CircleAction, CircleLift, CircleVerdict,
};
use line_actions::constructions::{
    affine_action, blowup, bs12, random_pl_action, BlowupSpec, RandomConstraints,
};
use line_actions::homeo::{fixed_points, Affine, Scan, SmoothMap};
use line_actions::measure::{phi, semiconjugacy_residual, theta_fiber_scan, uniform_grid, AffineMap, Measure};
use line_actions::order::{
    abelian_check, commensurate, dominating_power, hypothesis_check, is_positive, metabelian_check,
    order_properties, AbelianVerdict, Commensurability, MetabelianVerdict,
};
use line_actions::rational::{format_q, from_f64, q, qr, Q};
use line_actions::regularity::{distortion_sum_check, schwartz_extension_check};
use line_actions::{Error, Interval, LineMap, PlMap, Real, Word};

const RUNTIME_CAP: Duration = Duration::from_secs(60);
const EXACT_TOL: f64 = 1e-9;
const MARGIN_TOL: f64 = 1e-9;
const SEED: u64 = 0;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s(e: Error) -> String {
    e.to_string()
}

fn c1_hypothesis() -> Outcome {
    let t = Instant::now();
    let v = hypothesis_check(&bs12(), 8, &Scan::default()).map_err(e2s)?;
    let took = t.elapsed();
    ensure(v.passed(), format!("{v:?}"))?;
    ensure(took < RUNTIME_CAP, format!("took {took:?}"))?;
    Ok(format!("{v:?} in {:.2}s", took.as_secs_f64()))
}

fn c2_relation() -> Outcome {
    let g = bs12();
    let bab = g.realize(&Word::from_letters([(1, 1), (0, 1), (1, -1)]));
    let a2 = g.realize(&Word::from_letters([(0, 2)]));
    ensure(bab == a2, "b a b^-1 != a^2")?;
    match abelian_check(&g, 1, &Scan::default()) {
        AbelianVerdict::Witness { w1, w2, commutator } => {
            ensure(w1 == "a" && w2 == "b" && commutator == "x ↦ x - 1", format!("[{w1},{w2}] = {commutator}"))?
        }
        other => return Err(format!("{other:?}")),
    }
    let m = metabelian_check(&g, 6, 64, &Scan::default()).map_err(e2s)?;
    let MetabelianVerdict::DerivedLengthAtMost2 { commutators, all_infinitesimal: true } = m else {
        return Err(format!("{m:?}"));
    };
    Ok(format!("bab^-1 = a^2, [a,b] = x - 1, {commutators} commutators all in the infinitesimal subgroup"))
}

fn c3_order() -> Outcome {
    let g = bs12();
    let scan = Scan::default();
    let elements = enumerate_elements(&g, 5);
    let props = order_properties(&elements, &enumerate_elements(&g, 1)).map_err(e2s)?;
    ensure(props.passed(), format!("{props:?}"))?;

    let short = enumerate_elements(&g, 3);
    let mut fixing: Vec<&LineMap> = Vec::new();
    for e in short.iter().filter(|e| !e.is_identity()) {
        if !fixed_points(&e.map, &scan.search, scan.grid).map_err(e2s)?.is_empty() {
            fixing.push(&e.map);
        }
    }
    let mut pairs = 0;
    for (i, x) in fixing.iter().enumerate() {
        for y in &fixing[i + 1..] {
            match commensurate(x, y, 64).map_err(e2s)? {
                Commensurability::Yes { n, m } => ensure(n.abs() <= 64 && m.abs() <= 64, "witness over bound")?,
                other => return Err(format!("{x} vs {y}: {other:?}")),
            }
            pairs += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut dominated = 0;
    while dominated < 50 {
        let h = g.realize(&Word::random(&mut rng, 2, 6));
        let mut k = g.realize(&Word::random(&mut rng, 2, 6));
        if h.is_identity() || k.is_identity() || fixed_points(&h, &scan.search, scan.grid).map_err(e2s)?.is_empty() {
            continue;
        }
        if !is_positive(&k).map_err(e2s)? {
            k = k.inverse();
        }
        dominating_power(&h, &k, 64, &scan).map_err(e2s)?;
        dominated += 1;
    }
    Ok(format!(
        "{} ordered pairs, {} bi-invariance checks; {pairs} commensurate pairs; {dominated} dominating powers",
        props.pairs, props.bi_invariance_checks
    ))
}

fn c4_phi() -> Outcome {
    let g = bs12();
    let mu = Measure::lebesgue();
    let pa = phi(&mu, &g.generators[0]).map_err(e2s)?;
    let pb = phi(&mu, &g.generators[1]).map_err(e2s)?;
    ensure(pa == AffineMap::Exact(Affine::new(q(1), q(1))), format!("phi(a) = {pa}"))?;
    ensure(pb == AffineMap::Exact(Affine::new(q(2), q(0))), format!("phi(b) = {pb}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..100 {
        let w1 = Word::random(&mut rng, 2, 6);
        let w2 = Word::random(&mut rng, 2, 6);
        let lhs = phi(&mu, &g.realize(&w1.concat(&w2))).map_err(e2s)?;
        let rhs = phi(&mu, &g.realize(&w1)).map_err(e2s)?.compose(&phi(&mu, &g.realize(&w2)).map_err(e2s)?);
        ensure(lhs.is_exact() && lhs == rhs, format!("{} {}: {lhs} vs {rhs}", g.render(&w1), g.render(&w2)))?;
    }
    Ok("phi(a) = (1,1), phi(b) = (2,0); 100 seeded pairs exact".into())
}

fn c5_semiconjugacy() -> Outcome {
    let bu = blowup(&bs12(), &BlowupSpec::new(qr(1, 23), qr(1, 2), qr(1, 10), 5)).map_err(e2s)?;
    let mu = Measure::pullback(bu.collapse.clone());
    let grid = uniform_grid(-4.0, 4.0, 1000);
    let r = semiconjugacy_residual(&mu, &bu.action, &grid).map_err(e2s)?;
    ensure(r.max <= EXACT_TOL, format!("residual {:e} at {} ({:?})", r.max, r.at, r.generator))?;
    let step = qr(1, 1 << 20);
    for gap in &bu.gaps {
        let flat = mu.nu_q(&gap.lo, &gap.hi).ok_or("inexact")?;
        ensure(flat == Q::from_integer(0.into()), format!("theta not constant on gap at {}", format_q(&gap.point)))?;
        let left = mu.nu_q(&(&gap.lo - &step), &gap.lo).ok_or("inexact")?;
        let right = mu.nu_q(&gap.hi, &(&gap.hi + &step)).ok_or("inexact")?;
        ensure(left > Q::from_integer(0.into()) && right > Q::from_integer(0.into()), format!("theta flat beside gap at {}", format_q(&gap.point)))?;
    }
    Ok(format!("max residual {:e} (exact: {}), {} gaps flat with strict increase outside", r.max, r.exact, bu.gaps.len()))
}

fn c6_wandering_contrast() -> Outcome {
    let scan = theta_fiber_scan(&Measure::lebesgue(), -4.0, 4.0, 4096, 1e-12);
    let contrast = format!("affine BS(1,2) theta min increment {:e}, {} fibers", scan.min_increment, scan.fibers.len());
    ensure(scan.min_increment > 0.0 && scan.injective(), contrast.clone())?;
    let x = qr(1, 3);
    let bu = blowup(&bs12(), &BlowupSpec::new(x.clone(), qr(1, 2), qr(1, 10), 6))
        .map_err(|e| format!("blow-up at x* = 1/3 impossible: {e}; {contrast}"))?;
    let gap = bu.gap_at(&x).ok_or("no gap at x*")?.clone();
    let v = bu.certify_gap_wandering(&gap, 6).map_err(e2s)?;
    ensure(v.is_wandering(), format!("{v:?}"))?;
    Ok(format!("{v:?}; {contrast}"))
}

fn c7_distortion() -> Outcome {
    let f: LineMap = SmoothMap::sine_translation(0.3, 0.1).map_err(e2s)?.into();
    let j = Interval::closed(q(0), qr(1, 10)).map_err(e2s)?;
    let reports = distortion_sum_check(&f, &j, 50, 4096).map_err(e2s)?;
    ensure(reports.len() == 50, format!("{} reports", reports.len()))?;
    let worst = reports.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    ensure(worst >= -MARGIN_TOL, format!("min margin {worst:e}"))?;
    Ok(format!("C = {:.6}, min margin {worst:.3e} over n <= 50", reports[0].c))
}

fn c8_schwartz() -> Outcome {
    let g: LineMap = PlMap::affine(qr(1, 2), q(0)).map_err(e2s)?.into();
    let j = Interval::closed(qr(1, 4), qr(1, 2)).map_err(e2s)?;
    let r = schwartz_extension_check(&g, &j, None, 60).map_err(e2s)?;
    ensure(r.holds && r.max_ratio <= 2.0 && r.l_sum.total() <= 2.0, format!("{r:?}"))?;
    ensure(r.c == 0.0, format!("C = {}", r.c))?;
    Ok(format!("delta {}, max ratio {:.6}, sum |g^i(L)| <= {:.6}", r.delta, r.max_ratio, r.l_sum.total()))
}

fn c9_rotation() -> Outcome {
    let n = 10_000;
    let alphas = [("1/3", 1.0 / 3.0), ("sqrt2-1", 2f64.sqrt() - 1.0), ("golden", (5f64.sqrt() - 1.0) / 2.0)];
    let mut notes = Vec::new();
    for (name, a) in alphas {
        let aq = if name == "1/3" { qr(1, 3) } else { from_f64(a).map_err(e2s)? };
        let rigid = CircleLift::rotation(aq.clone());
        let denjoy = CircleLift::Periodic(denjoy_approximant(&aq, &qr(1, 10), &qr(1, 2), 6).map_err(e2s)?.lift);
        for (kind, f) in [("rigid", rigid), ("denjoy", denjoy)] {
            let r = rotation_number(&f, &Real::Exact(q(0)), n).map_err(e2s)?;
            ensure((r.estimate - a).abs() <= 1.0 / n as f64, format!("{kind} {name}: {} vs {a}", r.estimate))?;
            let r2 = rotation_number(&f.pow(2), &Real::Exact(q(0)), n).map_err(e2s)?;
            let bound = r2.error_bound + 2.0 * r.error_bound;
            ensure((r2.estimate - 2.0 * r.estimate).abs() <= bound, format!("{kind} {name}: rho(F^2) {} vs 2 rho(F) {}", r2.estimate, 2.0 * r.estimate))?;
        }
        notes.push(name);
    }
    Ok(format!("N = {n}, rigid and blown-up approximant for {}", notes.join(", ")))
}

fn commutator_is_identity(a: &Action) -> bool {
    let (f, g) = (&a.generators[0], &a.generators[1]);
    f.compose(g).compose(&f.inverse()).compose(&g.inverse()).is_identity()
}

fn c10_falsification() -> Outcome {
    let unit = Interval::closed(q(0), q(1)).map_err(e2s)?;
    let constraints = RandomConstraints { fixed_points_in: Some(unit), max_fixed_points: None };
    let scan = Scan::default();
    let (zero, one) = (q(0), q(1));
    let mut applicable = 0;
    for seed in 0..100 {
        let spec = random_pl_action(SEED + seed, 2, 2, &constraints).map_err(e2s)?;
        let action = Action::from_spec(&spec).map_err(e2s)?;
        // grow the ball one length at a time so out-of-scope pairs exit early
        let mut inside = true;
        'grow: for len in 1..=6 {
            for e in enumerate_elements(&action, len) {
                if e.word.len() < len || e.is_identity() {
                    continue;
                }
                if !fixed_points(&e.map, &scan.search, scan.grid).map_err(e2s)?.all_within(&zero, &one) {
                    inside = false;
                    break 'grow;
                }
            }
        }
        if inside {
            applicable += 1;
            ensure(commutator_is_identity(&action), format!("falsification: seed {seed} spec {}", spec.to_json()))?;
        }
    }
    let rot = affine_action(&[(q(1), qr(1, 3)), (q(1), from_f64((5f64.sqrt() - 1.0) / 2.0).map_err(e2s)?)]).map_err(e2s)?;
    let rot = CircleAction::from_action(&rot, &scan);
    let v = circle_dichotomy_check(&rot, 4, &scan).map_err(e2s)?;
    ensure(matches!(v, CircleVerdict::FreeAbelian { .. }), format!("rotation pair: {v:?}"))?;
    let sweep = format!("{applicable}/100 random pairs in scope, all commuting; rotation pair free abelian");
    let compact = CircleAction::Compactified(bs12());
    let v = circle_dichotomy_check(&compact, 4, &scan).map_err(e2s)?;
    ensure(matches!(v, CircleVerdict::GlobalFixedPoint { .. }), format!("{sweep}; compactified BS(1,2): {v:?}"))?;
    Ok(format!("{sweep}; compactified BS(1,2): {v:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 BS(1,2) hypothesis, words <= 8", c1_hypothesis),
        ("2 relation, abelian witness, metabelian", c2_relation),
        ("3 order laws, commensurability, dominating powers", c3_order),
        ("4 phi exact and multiplicative", c4_phi),
        ("5 semi-conjugacy residual on blow-up", c5_semiconjugacy),
        ("6 wandering gap at 1/3 and C2 contrast", c6_wandering_contrast),
        ("7 distortion margins", c7_distortion),
        ("8 Schwartz extension", c8_schwartz),
        ("9 rotation numbers", c9_rotation),
        ("10 commuting sweep and circle dichotomy", c10_falsification),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {name} [{secs:.2}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name} [{secs:.2}s]: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
