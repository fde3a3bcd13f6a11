//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use iafeas::bounds::{cooperative_check, bell_number, pairwise_bound, MAX_COOPERATIVE_USERS};
use iafeas::geometry::{
    area_2d, minkowski_sum, mixed_volume, mixed_volume_ie, newton_polygon, select_square_subsystem, SubsetStrategy,
};
use iafeas::leakage::{beam_sweep, minimize, LeakageTrace, MinimizeOptions, SweepOptions, FEASIBLE_THRESHOLD};
use iafeas::linalg::random_channels;
use iafeas::model::{count_equations, count_variables};
use iafeas::polysys::{bezout_bound, build_supports, literal_support, PolynomialSystem, SupportSet};
use iafeas::proper::{classify, classify_bruteforce, ProperStatus, BRUTE_FORCE_LIMIT};
use iafeas::solvers::{
    solve_2433, solve_3user_square, solve_asym_2323, solve_asym_2323_all, verify_alignment, Beamformers, Branch,
    FreeVector,
};
use iafeas::{parse_system, SystemSpec, UserSpec};

type Check = Result<String, String>;

const PROPER: [&str; 6] = [
    "(2x3,1)^4",
    "(2x1,1)^2",
    "(2x3,1)(3x2,1)",
    "(2x3,1)^2(3x2,1)^2",
    "(5x5,2)^4",
    "(3x3,2)^2",
];
const IMPROPER: [&str; 5] = [
    "(1x2,1)^3",
    "(2x1,1)(1x2,1)",
    "(2x2,1)(2x3,1)^3",
    "(2x2,1)^3(3x5,1)",
    "(5x5,3)(5x5,2)^3",
];
const PROPER_SINGLE_BEAM: [&str; 4] = ["(2x3,1)^4", "(2x1,1)^2", "(2x3,1)(3x2,1)", "(2x3,1)^2(3x2,1)^2"];

const SEEDS: u64 = 100;
const LEAKAGE_BUDGET: usize = 5000;
const IMPROPER_FLOOR: f64 = 1e-3;
const MONOTONE_SLACK: f64 = 1e-12;

fn sys(s: &str) -> SystemSpec {
    parse_system(s).unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed <= limit, format!("{what} took {elapsed:?} (limit {limit:?})"))
}

fn pts(p: &[[u32; 2]]) -> SupportSet {
    literal_support(&p.iter().map(|q| q.to_vec()).collect::<Vec<_>>()).unwrap()
}

fn dense_2d(deg: u32) -> SupportSet {
    let mut p = Vec::new();
    for a in 0..=deg {
        for b in 0..=deg - a {
            p.push([a, b]);
        }
    }
    pts(&p)
}

fn c1_classification() -> Check {
    let start = Instant::now();
    for s in PROPER {
        let v = classify(&sys(s));
        ensure(v.is_proper() && v.certificate.is_none(), format!("{s} should be proper"))?;
    }
    let mut witnesses = Vec::new();
    for s in IMPROPER {
        let system = sys(s);
        let v = classify(&system);
        ensure(v.status == ProperStatus::Improper, format!("{s} should be improper"))?;
        let cert = v.certificate.ok_or(format!("{s}: missing certificate"))?;
        ensure(cert.is_deficient(&system), format!("{s}: certificate is not deficient"))?;
        witnesses.push(format!("{s}: {}/{}", cert.equations.len(), cert.variable_count));
    }
    let zero = classify(&sys("(2x1,1)(1x2,1)")).certificate.unwrap();
    ensure(zero.variable_count == 0, "(2x1,1)(1x2,1) witness should touch no variables")?;
    let s = sys("(2x2,1)(2x3,1)^3");
    ensure(count_equations(&s) == 12 && count_variables(&s) == 11, "(2x2,1)(2x3,1)^3 counts")?;
    let s = sys("(5x5,3)(5x5,2)^3");
    ensure(count_equations(&s) == 60 && count_variables(&s) == 48, "(5x5,3)(5x5,2)^3 counts")?;
    // A 9-equation subset touching only 8 variables must exist.
    let s = sys("(2x2,1)^3(3x5,1)");
    let nine = classify_bruteforce(&s).unwrap();
    ensure(nine.status == ProperStatus::Improper, "brute force disagrees on (2x2,1)^3(3x5,1)")?;
    let mut found = false;
    let eqs = s.enumerate_equations();
    let n = eqs.len();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() != 9 {
            continue;
        }
        let mut vars = std::collections::BTreeSet::new();
        for (i, e) in eqs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                vars.extend(s.equation_variables(e));
            }
        }
        if vars.len() == 8 {
            found = true;
            break;
        }
    }
    ensure(found, "no 9-equation subset over 8 variables in (2x2,1)^3(3x5,1)")?;
    within(start.elapsed(), Duration::from_secs(1), "classification")?;
    Ok(format!("witness sizes (equations/variables): {}", witnesses.join(", ")))
}

fn random_small_system(rng: &mut ChaCha8Rng) -> SystemSpec {
    loop {
        let k = rng.random_range(2..=4);
        let users: Vec<UserSpec> = (0..k)
            .map(|_| {
                let m = rng.random_range(1..=5);
                let n = rng.random_range(1..=5);
                let d = rng.random_range(1..=m.min(n).min(2));
                UserSpec::new(m, n, d)
            })
            .collect();
        if let Ok(s) = SystemSpec::new(users) {
            if count_equations(&s) <= 12 {
                return s;
            }
        }
    }
}

fn c2_oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut systems: Vec<SystemSpec> = PROPER.iter().chain(IMPROPER.iter()).map(|s| sys(s)).collect();
    systems.extend((0..200).map(|_| random_small_system(&mut rng)));
    let mut checked = 0;
    let mut skipped = Vec::new();
    for s in &systems {
        if count_equations(s) > BRUTE_FORCE_LIMIT {
            skipped.push(s.render());
            continue;
        }
        let fast = classify(s);
        let slow = classify_bruteforce(s).map_err(|e| e.to_string())?;
        ensure(fast.status == slow.status, format!("{} disagrees", s.render()))?;
        checked += 1;
    }
    within(start.elapsed(), Duration::from_secs(60), "oracle comparison")?;
    Ok(format!(
        "{checked} systems agree; beyond the {BRUTE_FORCE_LIMIT}-equation enumeration limit: {}",
        skipped.join(", ")
    ))
}

fn c3_mixed_volume_values() -> Check {
    let start = Instant::now();
    let a1 = pts(&[[1, 2], [2, 0], [0, 2], [0, 0]]);
    let a2 = pts(&[[3, 1], [0, 4], [1, 1]]);
    let area1 = area_2d(&newton_polygon(&a1).unwrap());
    let area2 = area_2d(&newton_polygon(&a2).unwrap());
    let area12 = area_2d(&newton_polygon(&minkowski_sum(&a1, &a2).unwrap()).unwrap());
    ensure(
        (area1, area2, area12) == (Rational64::from(3), Rational64::from(3), Rational64::from(15)),
        format!("areas {area1}, {area2}, {area12}"),
    )?;
    let pair = [a1, a2];
    let mv = mixed_volume(&pair, 0).unwrap().mixed_volume;
    ensure(mv == 9 && mixed_volume_ie(&pair).unwrap() == 9, format!("sparse pair gave {mv}"))?;

    let lit = |p: &[&[u32]]| literal_support(&p.iter().map(|q| q.to_vec()).collect::<Vec<_>>()).unwrap();
    let flat = [
        lit(&[&[2, 0, 0], &[0, 2, 0], &[0, 0, 1], &[0, 0, 0]]),
        lit(&[&[2, 0, 0], &[0, 0, 0]]),
        lit(&[&[1, 0, 0], &[0, 0, 0]]),
    ];
    let mv3 = mixed_volume(&flat, 0).unwrap().mixed_volume;
    ensure(mv3 == 0 && mixed_volume_ie(&flat).unwrap() == 0, format!("3-variable system gave {mv3}"))?;

    let dense = vec![dense_2d(3), dense_2d(4)];
    let mvd = mixed_volume(&dense, 0).unwrap().mixed_volume;
    let bez = bezout_bound(&PolynomialSystem::from_supports(dense).unwrap());
    ensure(mvd == 12 && bez == 12, format!("dense pair gave {mvd}, Bezout {bez}"))?;
    within(start.elapsed(), Duration::from_secs(1), "mixed volume values")?;
    Ok("areas 3, 3, 15; MV 9; 0; 12 = Bezout".into())
}

fn c4_alignment_mixed_volumes() -> Check {
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for (s, expected) in [("(2x3,1)^4", 9u64), ("(2x3,1)^2(3x2,1)^2", 8), ("(2x2,1)^3(3x5,1)", 0)] {
        let ps = build_supports(&sys(s));
        let square = select_square_subsystem(&ps, SubsetStrategy::CanonicalPrefix).unwrap();
        let start = Instant::now();
        let a = mixed_volume(&square.supports, 1).unwrap().mixed_volume;
        let b = mixed_volume(&square.supports, 2).unwrap().mixed_volume;
        let elapsed = start.elapsed();
        lines.push(format!("{s}: {a} (seeds agree: {}, {elapsed:.1?})", a == b));
        if a != expected || a != b || elapsed > Duration::from_secs(1200) {
            failures.push(format!("{s}: got {a}/{b}, expected {expected}"));
        }
    }
    let ps = build_supports(&sys("(2x2,1)^3(3x5,1)"));
    let random: Vec<u64> = (0..5)
        .map(|i| {
            let sq = select_square_subsystem(&ps, SubsetStrategy::Random(100 + i)).unwrap();
            mixed_volume(&sq.supports, 3).unwrap().mixed_volume
        })
        .collect();
    lines.push(format!("(2x2,1)^3(3x5,1) random square subsystems: {random:?}"));
    if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(format!("{}; {}", failures.join("; "), lines.join("; ")))
    }
}

fn timed_solve(
    name: &str,
    spec: &str,
    solve: impl Fn(&iafeas::linalg::ChannelSet, u64) -> iafeas::Result<Beamformers>,
) -> Result<String, String> {
    let system = sys(spec);
    let mut total = Duration::ZERO;
    let mut worst = 0.0f64;
    let mut weakest = f64::INFINITY;
    for seed in 0..SEEDS {
        let ch = random_channels(&system, seed);
        let start = Instant::now();
        let bf = solve(&ch, seed).map_err(|e| format!("{name} seed {seed}: {e}"))?;
        total += start.elapsed();
        let check = verify_alignment(&system, &ch, &bf).unwrap();
        ensure(check.passes(1e-9, 1e-6), format!("{name} seed {seed}: {check:?}"))?;
        worst = worst.max(check.max_cross_residual);
        weakest = weakest.min(check.min_desired_gain);
    }
    let mean = total / SEEDS as u32;
    within(mean, Duration::from_millis(10), name)?;
    Ok(format!("{name} residual <= {worst:.1e}, gain >= {weakest:.1e}, {mean:.1?}/solve"))
}

fn c5_closed_form_solvers() -> Check {
    Ok([
        timed_solve("three-user", "(2x2,1)^3", |ch, _| solve_3user_square(ch))?,
        timed_solve("asymmetric", "(2x3,1)^2(3x2,1)^2", |ch, _| solve_asym_2323(ch, Branch::Dominant))?,
        timed_solve("one-big-receiver", "(2x4,1)(2x3,1)^3", |ch, seed| {
            solve_2433(ch, &FreeVector::Random(seed))
        })?,
    ]
    .join("; "))
}

fn c6_multiplicity() -> Check {
    let system = sys("(2x3,1)^2(3x2,1)^2");
    let ps = build_supports(&system);
    let mv = mixed_volume(&ps.supports, 0).unwrap().mixed_volume;
    let mut counts = Vec::new();
    for seed in 0..10 {
        let ch = random_channels(&system, seed);
        let sols = solve_asym_2323_all(&ch).map_err(|e| e.to_string())?;
        for bf in &sols {
            let c = verify_alignment(&system, &ch, bf).unwrap();
            ensure(c.passes(1e-9, 1e-6), format!("seed {seed}: invalid branch {c:?}"))?;
        }
        for i in 0..sols.len() {
            for j in i + 1..sols.len() {
                ensure(!sols[i].same_solution(&sols[j], 1e-6), format!("seed {seed}: branches {i} and {j} coincide"))?;
            }
        }
        ensure((4..=8).contains(&sols.len()), format!("seed {seed}: {} distinct solutions", sols.len()))?;
        counts.push(sols.len());
    }
    Ok(format!("distinct solutions per draw {counts:?}; computed mixed volume {mv}"))
}

fn leakage_run(system: &SystemSpec, seed: u64) -> LeakageTrace {
    let ch = random_channels(system, 1000 + seed);
    let opts = MinimizeOptions {
        max_iters: LEAKAGE_BUDGET,
        tol: 0.0,
        seed,
        powers: None,
    };
    minimize(system, &ch, &opts).unwrap().1
}

/// Returns the criterion 7 result and the worst leakage increase seen.
fn c7_leakage_probe() -> (Check, f64) {
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let groups = PROPER_SINGLE_BEAM.iter().map(|s| (*s, true)).chain(IMPROPER.iter().map(|s| (*s, false)));
    for (s, proper) in groups {
        let system = sys(s);
        let start = Instant::now();
        let traces: Vec<LeakageTrace> = (0..SEEDS).into_par_iter().map(|seed| leakage_run(&system, seed)).collect();
        let elapsed = start.elapsed();
        let maxes: Vec<f64> = traces.iter().map(LeakageTrace::max_percentage).collect();
        worst = traces.iter().map(LeakageTrace::worst_increase).fold(worst, f64::max);
        let (hits, ok) = if proper {
            let n = maxes.iter().filter(|&&p| p < FEASIBLE_THRESHOLD).count();
            (n, n >= 95)
        } else {
            let n = maxes.iter().filter(|&&p| p > IMPROPER_FLOOR).count();
            (n, n == SEEDS as usize)
        };
        let lowest = maxes.iter().copied().fold(f64::INFINITY, f64::min);
        let line = format!("{s}: {hits}/{SEEDS} (min {lowest:.2e}, {elapsed:.1?})");
        if !ok || elapsed > Duration::from_secs(60) {
            failures.push(line.clone());
        }
        lines.push(line);
    }
    let check = if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(format!("short of target: {}; all: {}", failures.join("; "), lines.join("; ")))
    };
    (check, worst)
}

/// Returns the criterion 8 result and the worst leakage increase seen.
fn c8_sweep_shape() -> (Check, f64) {
    let opts = SweepOptions {
        trials: 5,
        seed: 8,
        ..Default::default()
    };
    let sweep = |s: &str| beam_sweep(&sys(s), &opts).unwrap();
    let main = sweep("(2x3,1)^4");
    let asym = sweep("(2x3,1)^2(3x2,1)^2");
    let multi = sweep("(5x5,2)^4");
    let worst = main.worst_increase.max(asym.worst_increase).max(multi.worst_increase);
    let medians: Vec<String> = main.points.iter().map(|p| format!("{:.2e}", p.max_p)).collect();
    let soft = format!(
        "soft: fewer receive antennas leaks more at DoF+1 {} ({:.3} vs {:.3}); 4-DoF above 8-DoF at DoF+1 {} ({:.3} vs {:.3})",
        asym.points[1].max_p > main.points[1].max_p,
        asym.points[1].max_p,
        main.points[1].max_p,
        main.points[1].max_p.min(asym.points[1].max_p) > multi.points[1].max_p,
        main.points[1].max_p.min(asym.points[1].max_p),
        multi.points[1].max_p,
    );
    let shape_ok = main.points.len() == 5
        && main.rows.len() == 25
        && main.points[0].max_p < FEASIBLE_THRESHOLD
        && main.points[1..].iter().all(|p| p.max_p > 0.0);
    let check = if shape_ok {
        Ok(format!("median max p by beam count [{}]; {soft}", medians.join(", ")))
    } else {
        Err(format!("median max p by beam count [{}]", medians.join(", ")))
    };
    (check, worst)
}

fn c9_monotone(worst: f64) -> Check {
    if worst <= MONOTONE_SLACK {
        Ok(format!("largest per-iteration increase {worst:.1e}"))
    } else {
        Err(format!("leakage rose by {worst:.1e}"))
    }
}

fn c10_outer_bounds() -> Check {
    let check = |s: &str| cooperative_check(&sys(s), bell_number(MAX_COOPERATIVE_USERS)).unwrap();
    let r = check("(3x3,2)^2");
    ensure(!r.pairwise_violations.is_empty(), "(3x3,2)^2 not flagged")?;

    let r = check("(3x4,2)(1x3,1)(10x4,2)");
    ensure(r.pairwise_violations.is_empty(), "(3x4,2)(1x3,1)(10x4,2) fails pairwise")?;
    let hit = r.cooperative_violations.iter().find(|v| {
        v.bound == 4 && v.merged.0 == UserSpec::new(4, 7, 3) && v.merged.1 == UserSpec::new(10, 4, 2)
    });
    ensure(hit.is_some(), format!("expected merged (4x7,3) vs (10x4,2) violation, got {:?}", r.cooperative_violations))?;

    let r = check("(2x3,1)(3x2,1)");
    let s = sys("(2x3,1)(3x2,1)");
    let b = pairwise_bound(s.user(1), s.user(2));
    ensure(r.passes() && b == 2, format!("(2x3,1)(3x2,1): bound {b}"))?;
    Ok("(3x3,2)^2 flagged; cooperative merge (4x7,3) vs (10x4,2) bound 4 < 5; (2x3,1)(3x2,1) bound 2".into())
}

fn run(n: usize, title: &str, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let (tag, detail, ok) = match outcome {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("[{tag}] {n:>2} {title} ({:.1?}): {detail}", start.elapsed());
    ok
}

fn main() {
    let mut worst = f64::NEG_INFINITY;
    let mut results = vec![
        run(1, "proper classification", c1_classification),
        run(2, "matching agrees with enumeration", c2_oracle_equivalence),
        run(3, "mixed volume of small systems", c3_mixed_volume_values),
        run(4, "mixed volume of alignment systems", c4_alignment_mixed_volumes),
        run(5, "closed-form solvers", c5_closed_form_solvers),
        run(6, "solution multiplicity", c6_multiplicity),
    ];
    results.push(run(7, "leakage feasibility probe", || {
        let (c, w) = c7_leakage_probe();
        worst = worst.max(w);
        c
    }));
    results.push(run(8, "beam sweep shape", || {
        let (c, w) = c8_sweep_shape();
        worst = worst.max(w);
        c
    }));
    results.push(run(9, "leakage never increases", || c9_monotone(worst)));
    results.push(run(10, "outer bounds", c10_outer_bounds));
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
