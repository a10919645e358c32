//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use vulnscope::assess::{assess, validate_witness, AssessOptions, Verdict};
use vulnscope::flat::ode::{CircadianParams, SocialParams};
use vulnscope::flat::{
    bnf_quotient, difference_flat_quotient, recover_circadian, recover_social, simulate_ode, BnfChain,
    FlatAlphabetSpec, OdeModel,
};
use vulnscope::hds::compose_abstraction;
use vulnscope::lattice::{
    build_star_abstraction, transition_feasible_fast, transition_feasible_full, BuildOptions, Cell, Direction, Face,
    LatticePartition, LinearSystem, Triplet,
};
use vulnscope::ltl::{eval_trace, sat_solve, Cnf, SatResult};
use vulnscope::model::{compile, ModelFile};
use vulnscope::ts::{check_quotient_condition, coarsest_bisimulation, quotient, TransitionSystem};

use common::{
    bmc_violated, brute_force_sat, delay_chain, enumerate_violation, inflated_ts, random_3cnf, random_face,
    random_formula, random_linear, rng, simulate_bnf_crossings,
};

type Outcome = Result<String, String>;

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let instances = 10_000u64;
    let mismatches: usize = (0..instances)
        .into_par_iter()
        .map(|seed| {
            let mut r = rng(seed);
            let n = r.random_range(2..=8);
            let m = r.random_range(1..=3);
            let sys = random_linear(&mut r, n, m, seed % 2 == 1);
            let (part, face) = random_face(&mut r, n);
            Direction::BOTH
                .iter()
                .filter(|&&d| {
                    transition_feasible_fast(&sys, &face, &part, d) != transition_feasible_full(&sys, &face, &part, d).unwrap()
                })
                .count()
        })
        .sum();
    let elapsed = start.elapsed();
    let detail = format!("{instances} instances, both directions, {mismatches} mismatches, {elapsed:.2?}");
    if mismatches == 0 && elapsed < Duration::from_secs(60) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sparse_system(n: usize, seed: u64) -> LinearSystem {
    let mut r = rng(seed);
    let mut a = Vec::new();
    for i in 0..n {
        let mut cols = BTreeSet::new();
        for _ in 0..r.random_range(1..=10) {
            cols.insert(r.random_range(0..n));
        }
        a.extend(cols.into_iter().map(|j| Triplet { i, j, v: r.random_range(-2.0..2.0) }));
    }
    let b: Vec<Triplet> = (0..n).filter(|i| i % 7 == 0).map(|i| Triplet { i, j: 0, v: 1.0 }).collect();
    LinearSystem::from_triplets(n, 1, &a, &b).unwrap()
}

fn criterion_2() -> Outcome {
    let n = 10_000;
    let sys = sparse_system(n, 42);
    let part = LatticePartition::uniform(vec![-1.0; n], vec![1.0; n], 1.0).unwrap();
    let mut r = rng(43);
    let mut times = Vec::new();
    let mut edges = 0;
    for _ in 0..1000 {
        let cell = Cell((0..n).map(|_| r.random_range(0..2)).collect());
        let axis = loop {
            let k = r.random_range(0..n);
            if cell.0[k] == 0 {
                break k;
            }
        };
        let face = Face::new(cell, axis, &part).unwrap();
        let t = Instant::now();
        let e = transition_feasible_fast(&sys, &face, &part, Direction::LowToHigh);
        times.push(t.elapsed());
        edges += e as usize;
    }
    times.sort();
    let p99 = times[times.len() * 99 / 100];
    let t = Instant::now();
    let star = build_star_abstraction(&sys, &part, &Cell(vec![0; n]), &BuildOptions::default()).unwrap();
    let slab = t.elapsed();
    let detail = format!(
        "n = {n}: fast test median {:.2?}, p99 {p99:.2?} ({edges}/1000 feasible); {}-face slab in {slab:.2?}",
        times[times.len() / 2],
        star.num_states() - 1
    );
    if p99 < Duration::from_millis(1) && slab < Duration::from_secs(1) && star.num_states() == n + 1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Outcome {
    let mut details = Vec::new();
    let mut violations = 0;
    for n in 1..=3 {
        let chain = BnfChain::new(n, 1.0, (0.0, 3.0), 1.0).unwrap();
        let ts = bnf_quotient(&chain);
        let emitted: BTreeSet<(usize, usize)> = ts.edges().filter(|(s, t)| s != t).collect();
        let seen: BTreeSet<(usize, usize)> = simulate_bnf_crossings(&chain, 10_000, 100 + n as u64).into_iter().collect();
        let unexplained = seen.difference(&emitted).count();
        let unwitnessed = emitted.difference(&seen).count();
        violations += unexplained + unwitnessed;
        details.push(format!("n={n}: {} edges, {unexplained} unexplained, {unwitnessed} unwitnessed", emitted.len()));
    }
    let detail = details.join("; ");
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_4() -> Outcome {
    let mut violations = 0;
    let mut cases = 0;
    for y in 1..=3 {
        for k in 1..=3 {
            cases += 1;
            let (chain, part) = delay_chain(y, k);
            let spec = FlatAlphabetSpec::new((0..y).map(|i| format!("y{i}")).collect(), k).unwrap();
            let db = difference_flat_quotient(&spec, 1_000_000).unwrap();
            let q = quotient(&chain, &part).unwrap();
            let ok = check_quotient_condition(&chain, &part).unwrap()
                && q.edges().eq(db.edges())
                && q.output_map() == db.output_map()
                && coarsest_bisimulation(&db).block_count() == if y == 1 { 1 } else { db.num_states() };
            violations += !ok as usize;
        }
    }
    let detail = format!("{cases} alphabet/memory pairs, {violations} violations");
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Suite {
    systems: Vec<(TransitionSystem, TransitionSystem)>,
    formulas: Vec<Vec<vulnscope::ltl::Ltl>>,
}

fn suite() -> Suite {
    let mut r = rng(2024);
    let mut systems = Vec::new();
    let mut formulas = Vec::new();
    for _ in 0..100 {
        let ts = inflated_ts(&mut r, 6, 0.35);
        let q = quotient(&ts, &coarsest_bisimulation(&ts)).unwrap();
        systems.push((ts, q));
        formulas.push((0..50).map(|_| random_formula(&mut r, 3)).collect());
    }
    Suite { systems, formulas }
}

fn criterion_5(s: &Suite) -> Outcome {
    let results: Vec<(usize, usize, usize)> = s
        .systems
        .par_iter()
        .zip(&s.formulas)
        .map(|((ts, q), fs)| {
            let (mut checks, mut disagree, mut errors) = (0, 0, 0);
            for phi in fs {
                for k in 1..=6 {
                    checks += 1;
                    match (bmc_violated(ts, phi, k), bmc_violated(q, phi, k)) {
                        (Ok(a), Ok(b)) => disagree += (a != b) as usize,
                        _ => errors += 1,
                    }
                }
            }
            (checks, disagree, errors)
        })
        .collect();
    let checks: usize = results.iter().map(|r| r.0).sum();
    let disagree: usize = results.iter().map(|r| r.1).sum();
    let errors: usize = results.iter().map(|r| r.2).sum();
    let shrunk = s.systems.iter().filter(|(t, q)| q.num_states() < t.num_states()).count();
    let detail = format!(
        "{} systems ({shrunk} strictly reduced), {checks} checks, {disagree} disagreements, {errors} errors",
        s.systems.len()
    );
    if disagree == 0 && errors == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_6(s: &Suite) -> Outcome {
    let results: Vec<(usize, usize, usize, usize)> = s
        .systems
        .par_iter()
        .zip(&s.formulas)
        .map(|((ts, q), fs)| {
            let (mut checks, mut sat, mut mismatch, mut bad) = (0, 0, 0, 0);
            for sys in [ts, q] {
                for phi in fs {
                    for k in 1..=6 {
                        checks += 1;
                        match bmc_violated(sys, phi, k) {
                            Ok(v) => {
                                sat += v as usize;
                                mismatch += (v != enumerate_violation(sys, phi, k).is_some()) as usize;
                            }
                            Err(_) => bad += 1,
                        }
                    }
                }
            }
            (checks, sat, mismatch, bad)
        })
        .collect();
    let sum = |f: fn(&(usize, usize, usize, usize)) -> usize| results.iter().map(f).sum::<usize>();
    let (checks, sat, mismatch, bad) = (sum(|r| r.0), sum(|r| r.1), sum(|r| r.2), sum(|r| r.3));
    let detail = format!("{checks} checks, {sat} SAT, {mismatch} verdict mismatches, {bad} bad witnesses");
    if mismatch == 0 && bad == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    let results: Vec<(bool, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|seed| {
            let mut r = rng(10_000 + seed);
            let clauses = random_3cnf(&mut r, 20, 85 + (seed % 11) as usize - 5);
            let mut cnf = Cnf::new(20);
            for c in &clauses {
                cnf.add_clause(c.clone());
            }
            let truth = brute_force_sat(20, &clauses);
            match sat_solve(&cnf) {
                SatResult::Sat(m) => (true, truth && cnf.is_satisfied_by(&m)),
                SatResult::Unsat => (false, !truth),
                SatResult::Timeout => (false, false),
            }
        })
        .collect();
    let sat = results.iter().filter(|r| r.0).count();
    let wrong = results.iter().filter(|r| !r.1).count();
    let detail = format!("1000 instances ({sat} SAT, {} UNSAT), {wrong} wrong", 1000 - sat);
    if wrong == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

fn criterion_8() -> Outcome {
    let social = OdeModel::default_social();
    let traj = simulate_ode(&social).map_err(|e| e.to_string())?;
    let sp = SocialParams::from_map(&social.parameters).unwrap();
    let rec = recover_social(&traj.column("E").unwrap(), social.step, 0.0, &sp).map_err(|e| e.to_string())?;
    let (p, m) = (traj.column("P").unwrap(), traj.column("M").unwrap());
    let mut social_err: f64 = 0.0;
    for i in rec.valid.clone() {
        social_err = social_err.max(rel(rec.p[i], p[i])).max(rel(rec.m[i], m[i])).max(rel(rec.lambda[i], sp.lambda));
    }
    let mut drift: f64 = 0.0;
    for w in traj.states.windows(2) {
        let d = (w[1].iter().sum::<f64>() - w[0].iter().sum::<f64>()) / social.step;
        drift = drift.max((d - sp.lambda).abs());
    }

    let circ = OdeModel::default_circadian();
    let traj = simulate_ode(&circ).map_err(|e| e.to_string())?;
    let cp = CircadianParams::from_map(&circ.parameters, circ.readings).unwrap();
    let rec = recover_circadian(&traj.column("C_N").unwrap(), circ.step, 0.0, &cp).map_err(|e| e.to_string())?;
    let pairs = [(&rec.c, "C"), (&rec.p2, "P_2"), (&rec.p1, "P_1"), (&rec.p0, "P_0"), (&rec.mp, "M_P")];
    let mut circ_err: f64 = 0.0;
    for (got, name) in pairs {
        let want = traj.column(name).unwrap();
        for i in rec.valid.clone() {
            circ_err = circ_err.max(rel(got[i], want[i]));
        }
    }
    for i in rec.valid.clone() {
        circ_err = circ_err.max(rel(rec.v_sp[i], cp.v_sp));
    }
    let detail = format!(
        "social max rel err {social_err:.2e} (tol 1e-6), circadian {circ_err:.2e} (tol 1e-3), conservation drift {drift:.2e} (tol 1e-9)"
    );
    if social_err < 1e-6 && circ_err < 1e-3 && drift < 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("models/hybrid_demo.json");
    let model = ModelFile::from_json_str(&std::fs::read_to_string(path).unwrap()).map_err(|e| e.to_string())?;
    let compiled = compile(&model).map_err(|e| e.to_string())?;
    let ts = compose_abstraction(&compiled.hybrid).map_err(|e| e.to_string())?;
    let mut opts = AssessOptions::new(model.analysis.bound.unwrap_or(6));
    opts.timing = false;
    let report = assess(&model, "no_collapse", &opts).map_err(|e| e.to_string())?;
    let again = assess(&model, "no_collapse", &opts).map_err(|e| e.to_string())?;
    if report.verdict != Verdict::Vulnerable {
        return Err(format!("verdict {}", report.verdict));
    }
    let trace = report.witness.as_ref().unwrap().trace();
    let phi = compiled.parse_spec("no_collapse", model.spec("no_collapse").unwrap()).unwrap();
    let alarm = compiled.parse_spec("alarm_first", model.spec("alarm_first").unwrap()).unwrap();
    let replays = validate_witness(&ts, &phi, &trace).is_ok();
    let violates = !eval_trace(&phi, &trace);
    let alarm_first = eval_trace(&alarm, &trace);
    let identical = report.to_json_string() == again.to_json_string();
    let detail = format!(
        "vulnerable at k = {} ({} steps); replays {replays}, violates no_collapse {violates}, satisfies alarm_first {alarm_first}, byte-identical {identical}",
        report.bound,
        trace.len()
    );
    if replays && violates && alarm_first && identical {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let suite = suite();
    let runs: Vec<(usize, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(criterion_1)),
        (2, Box::new(criterion_2)),
        (3, Box::new(criterion_3)),
        (4, Box::new(criterion_4)),
        (5, Box::new(|| criterion_5(&suite))),
        (6, Box::new(|| criterion_6(&suite))),
        (7, Box::new(criterion_7)),
        (8, Box::new(criterion_8)),
        (9, Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (n, run) in runs {
        match run() {
            Ok(detail) => println!("criterion {n}: PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL  {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
