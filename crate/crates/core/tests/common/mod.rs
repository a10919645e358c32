//! Generators and independent oracles shared by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vulnscope::flat::{bnf_slice_partition, BnfChain, SliceState};
use vulnscope::lattice::{Cell, Face, LatticePartition, LinearSystem, Triplet};
use vulnscope::ltl::{eval_trace, Atom, Ltl, Trace, TraceStep};
use vulnscope::ts::{StatePartition, StateId, TransitionSystem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const OUTPUTS: [&str; 3] = ["(p,a)", "(p,b)", "(r,a)"];

fn finish(n: usize, out: Vec<usize>, edges: Vec<(usize, usize)>, r: &mut ChaCha8Rng) -> TransitionSystem {
    let outputs = OUTPUTS.iter().map(|s| s.to_string()).collect();
    let ts = TransitionSystem::from_edges(outputs, out, edges).unwrap();
    let initial = if r.random_bool(0.5) {
        None
    } else {
        let mut init: Vec<usize> = (0..n).filter(|_| r.random_bool(0.4)).collect();
        if init.is_empty() {
            init.push(r.random_range(0..n));
        }
        Some(init)
    };
    ts.with_initial(initial).unwrap()
}

/// Up to `max` states, outputs drawn from [`OUTPUTS`], edges with
/// probability `p`.
pub fn random_ts(r: &mut ChaCha8Rng, max: usize, p: f64) -> TransitionSystem {
    let n = r.random_range(1..=max);
    let out: Vec<usize> = (0..n).map(|_| r.random_range(0..OUTPUTS.len())).collect();
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if r.random_bool(p) {
                edges.push((s, t));
            }
        }
    }
    finish(n, out, edges, r)
}

/// A random base system blown up by copying states; every copy gets, for
/// each successor of its original, a nonempty set of copies of that
/// successor. The result is bisimilar to the base, so its coarsest quotient
/// is usually much smaller than itself.
pub fn inflated_ts(r: &mut ChaCha8Rng, max: usize, p: f64) -> TransitionSystem {
    let base_n = r.random_range(1..=max.div_ceil(2));
    let out_base: Vec<usize> = (0..base_n).map(|_| r.random_range(0..OUTPUTS.len())).collect();
    let succ: Vec<Vec<usize>> =
        (0..base_n).map(|_| (0..base_n).filter(|_| r.random_bool(p)).collect()).collect();
    let mut origin: Vec<usize> = (0..base_n).collect();
    while origin.len() < max && r.random_bool(0.7) {
        origin.push(r.random_range(0..base_n));
    }
    let n = origin.len();
    let copies = |b: usize| -> Vec<usize> { (0..n).filter(|&c| origin[c] == b).collect() };
    let mut edges = Vec::new();
    for c in 0..n {
        for &t in &succ[origin[c]] {
            let cs = copies(t);
            let mut chosen: Vec<usize> = cs.iter().copied().filter(|_| r.random_bool(0.5)).collect();
            if chosen.is_empty() {
                chosen.push(*cs.choose(r).unwrap());
            }
            edges.extend(chosen.into_iter().map(|d| (c, d)));
        }
    }
    let out = origin.iter().map(|&b| out_base[b]).collect();
    finish(n, out, edges, r)
}

/// Random formula of tree depth at most `depth` over the atoms of
/// [`OUTPUTS`] (plus wildcards).
pub fn random_formula(r: &mut ChaCha8Rng, depth: usize) -> Ltl {
    if depth == 0 || r.random_bool(0.25) {
        return match r.random_range(0..10) {
            0 => Ltl::True,
            1 => Ltl::False,
            2 => Ltl::Atom(Atom::wildcard(["p", "r"].choose(r).unwrap())),
            _ => {
                let o = OUTPUTS.choose(r).unwrap();
                let (q, k) = vulnscope::ltl::split_output(o).unwrap();
                Ltl::atom(q, k)
            }
        };
    }
    let d = depth - 1;
    match r.random_range(0..8) {
        0 => random_formula(r, d).not(),
        1 => random_formula(r, d).or(random_formula(r, d)),
        2 => random_formula(r, d).and(random_formula(r, d)),
        3 => random_formula(r, d).implies(random_formula(r, d)),
        4 => random_formula(r, d).next(),
        5 => random_formula(r, d).until(random_formula(r, d)),
        6 => random_formula(r, d).eventually(),
        _ => random_formula(r, d).globally(),
    }
}

/// Largest bisimulation on one system by naive greatest-fixpoint pruning of
/// the output-equivalence relation.
pub fn naive_bisimilar(ts: &TransitionSystem) -> Vec<Vec<bool>> {
    let n = ts.num_states();
    let mut rel: Vec<Vec<bool>> =
        (0..n).map(|s| (0..n).map(|t| ts.output_index(s) == ts.output_index(t)).collect()).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            for t in 0..n {
                if !rel[s][t] {
                    continue;
                }
                let fwd = ts.successors(s).iter().all(|&a| ts.successors(t).iter().any(|&b| rel[a][b]));
                let bwd = ts.successors(t).iter().all(|&b| ts.successors(s).iter().any(|&a| rel[a][b]));
                if !(fwd && bwd) {
                    rel[s][t] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return rel;
        }
    }
}

pub fn trace_of(ts: &TransitionSystem, path: &[StateId], loop_back: Option<usize>) -> Trace {
    let steps = path
        .iter()
        .map(|&s| {
            let (q, k) = vulnscope::ltl::split_output(ts.output(s)).unwrap();
            TraceStep::new(q, k)
        })
        .collect();
    Trace { steps, loop_back }
}

/// Exhaustive search for a `k`-step path violating `phi`, loop-free or as a
/// lasso closing up to bisimilarity.
pub fn enumerate_violation(ts: &TransitionSystem, phi: &Ltl, k: usize) -> Option<Trace> {
    let bis = naive_bisimilar(ts);
    let neg = phi.clone().not();
    let mut path = Vec::with_capacity(k + 1);
    fn dfs(
        ts: &TransitionSystem,
        neg: &Ltl,
        k: usize,
        bis: &[Vec<bool>],
        path: &mut Vec<StateId>,
    ) -> Option<Trace> {
        if path.len() == k + 1 {
            let finite = trace_of(ts, path, None);
            if eval_trace(neg, &finite) {
                return Some(finite);
            }
            let last = path[k];
            for l in 0..=k {
                if ts.successors(last).iter().any(|&t| bis[t][path[l]]) {
                    let lasso = trace_of(ts, path, Some(l));
                    if eval_trace(neg, &lasso) {
                        return Some(lasso);
                    }
                }
            }
            return None;
        }
        let last = *path.last().unwrap();
        for &t in ts.successors(last) {
            path.push(t);
            let found = dfs(ts, neg, k, bis, path);
            path.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }
    for s in ts.initial_states() {
        path.push(s);
        let found = dfs(ts, &neg, k, &bis, &mut path);
        path.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Infinite-word semantics of a lasso evaluated directly on positions of
/// the unrolled word. `U` searches forward from `i` up to one full period
/// past `max(i, l)`, after which positions repeat.
pub fn eval_periodic(phi: &Ltl, trace: &Trace, i: usize) -> bool {
    let l = trace.loop_back.expect("lasso");
    let n = trace.len();
    let period = n - l;
    let at = |p: usize| if p < n { &trace.steps[p] } else { &trace.steps[l + (p - l) % period] };
    match phi {
        Ltl::True => true,
        Ltl::False => false,
        Ltl::Atom(a) => a.matches(&at(i).q, &at(i).k),
        Ltl::Not(a) => !eval_periodic(a, trace, i),
        Ltl::Or(a, b) => eval_periodic(a, trace, i) || eval_periodic(b, trace, i),
        Ltl::Next(a) => eval_periodic(a, trace, i + 1),
        Ltl::Until(a, b) => {
            for j in i..i.max(l) + period {
                if eval_periodic(b, trace, j) {
                    return true;
                }
                if !eval_periodic(a, trace, j) {
                    return false;
                }
            }
            false
        }
    }
}

/// Brute-force satisfiability over at most 26 variables, 64 assignments per
/// machine word.
pub fn brute_force_sat(num_vars: usize, clauses: &[Vec<i32>]) -> bool {
    assert!(num_vars <= 26);
    let low = num_vars.min(6);
    let pattern = |v: usize| -> u64 {
        let mut m = 0u64;
        for bit in 0..64 {
            if (bit >> v) & 1 == 1 {
                m |= 1 << bit;
            }
        }
        m
    };
    let pats: Vec<u64> = (0..low).map(pattern).collect();
    let valid_mask = if low == 6 { u64::MAX } else { (1u64 << (1 << low)) - 1 };
    let words = 1usize << num_vars.saturating_sub(6);
    for w in 0..words {
        let mut all = valid_mask;
        for c in clauses {
            let mut cm = 0u64;
            for &l in c {
                let v = l.unsigned_abs() as usize - 1;
                let m = if v < 6 {
                    pats[v]
                } else if (w >> (v - 6)) & 1 == 1 {
                    u64::MAX
                } else {
                    0
                };
                cm |= if l > 0 { m } else { !m };
            }
            all &= cm;
            if all == 0 {
                break;
            }
        }
        if all != 0 {
            return true;
        }
    }
    false
}

pub fn random_3cnf(r: &mut ChaCha8Rng, vars: usize, clauses: usize) -> Vec<Vec<i32>> {
    (0..clauses)
        .map(|_| {
            let mut vs: Vec<i32> = Vec::new();
            while vs.len() < 3 {
                let v = r.random_range(1..=vars as i32);
                if !vs.contains(&v) {
                    vs.push(v);
                }
            }
            vs.into_iter().map(|v| if r.random_bool(0.5) { v } else { -v }).collect()
        })
        .collect()
}

/// Random linear system of dimension `n` with `m` inputs; `sparse` keeps
/// about two nonzeros per row and stores the matrices in CSR form.
pub fn random_linear(r: &mut ChaCha8Rng, n: usize, m: usize, sparse: bool) -> LinearSystem {
    let val = |r: &mut ChaCha8Rng| -> f64 {
        if r.random_bool(0.2) { 0.0 } else { (r.random_range(-40..=40) as f64) / 8.0 }
    };
    let zero_b = r.random_bool(0.3);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let keep = if sparse { r.random_bool(2.0 / n as f64) } else { true };
            if keep {
                let v = val(r);
                if v != 0.0 {
                    a.push(Triplet { i, j, v });
                }
            }
        }
        for j in 0..m {
            if !zero_b && r.random_bool(if sparse { 0.3 } else { 0.6 }) {
                let v = val(r);
                if v != 0.0 {
                    b.push(Triplet { i, j, v });
                }
            }
        }
    }
    if sparse {
        LinearSystem::from_triplets(n, m, &a, &b).unwrap()
    } else {
        let mut ad = vec![vec![0.0; n]; n];
        for t in &a {
            ad[t.i][t.j] = t.v;
        }
        let mut bd = vec![vec![0.0; m]; n];
        for t in &b {
            bd[t.i][t.j] = t.v;
        }
        LinearSystem::from_dense(&ad, &bd).unwrap()
    }
}

/// Exact flow of the integrator chain under constant input `u` for time `t`.
fn chain_flow(x: &[f64], u: f64, t: f64) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    for j in 0..n {
        let mut acc = 0.0;
        let mut fact = 1.0;
        let mut pow = 1.0;
        for (i, xi) in x[j..].iter().enumerate() {
            if i > 0 {
                fact *= i as f64;
                pow *= t;
            }
            acc += xi * pow / fact;
        }
        let i = n - j;
        fact *= i as f64;
        pow *= t;
        acc += u * pow / fact;
        out[j] = acc;
    }
    out
}

/// Class changes seen in bang-bang simulations of the chain, as
/// `(from, to)` state pairs; `trials` random runs start in every class.
pub fn simulate_bnf_crossings(chain: &BnfChain, trials: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut r = rng(seed);
    let mut seen = std::collections::BTreeSet::new();
    let (lo, _) = chain.x1_range();
    let eps = chain.epsilon();
    let b = chain.orthant_bound();
    for id in 0..chain.state_count() {
        let state = chain.state_from_id(id);
        for _ in 0..trials {
            let mut x = vec![lo + (state.slice as f64 + r.random::<f64>()) * eps];
            for s in &state.signs {
                let mag = b * r.random::<f64>().powi(2);
                x.push(if *s == vulnscope::flat::Sign::Plus { mag } else { -mag.max(1e-12) });
            }
            if let Some(to) = run_trial(chain, &state, x, &mut r, b) {
                seen.insert((id, chain.state_id(&to)));
            }
        }
    }
    seen.into_iter().collect()
}

fn run_trial(chain: &BnfChain, from: &SliceState, mut x: Vec<f64>, r: &mut ChaCha8Rng, b: f64) -> Option<SliceState> {
    let magnitude = [0.3, 3.0, 30.0].choose(r).copied().unwrap() * b;
    let mut u = if r.random_bool(0.5) { magnitude } else { -magnitude };
    let dt = chain.epsilon().min(b) / (b + magnitude) / 40.0;
    let mut switch_in = r.random_range(1..200);
    for _ in 0..20_000 {
        let next = chain_flow(&x, u, dt);
        if !chain.contains(&next) {
            return None;
        }
        let class = bnf_slice_partition(chain, &next).ok()?;
        if &class != from {
            // bisect for the first instant the class changes
            let (mut a, mut c) = (0.0, dt);
            for _ in 0..60 {
                let mid = 0.5 * (a + c);
                match bnf_slice_partition(chain, &chain_flow(&x, u, mid)) {
                    Ok(s) if &s == from => a = mid,
                    _ => c = mid,
                }
            }
            let y = chain_flow(&x, u, c);
            return if chain.contains(&y) { bnf_slice_partition(chain, &y).ok() } else { None };
        }
        x = next;
        switch_in -= 1;
        if switch_in == 0 {
            u = -u;
            switch_in = r.random_range(1..200);
        }
    }
    None
}

/// A random grid of dimension `n` and a random interior face on it. All
/// coordinates are dyadic so both feasibility tests compute exactly.
pub fn random_face(r: &mut ChaCha8Rng, n: usize) -> (LatticePartition, Face) {
    let eps = *[0.5, 1.0, 2.0].choose(r).unwrap();
    let axis = r.random_range(0..n);
    let counts: Vec<usize> = (0..n).map(|j| if j == axis { r.random_range(2..=4) } else { r.random_range(1..=3) }).collect();
    let lower: Vec<f64> = (0..n).map(|_| r.random_range(-4..=2) as f64).collect();
    let upper: Vec<f64> = lower.iter().zip(&counts).map(|(l, &c)| l + c as f64 * eps).collect();
    let part = LatticePartition::uniform(lower, upper, eps).unwrap();
    let idx: Vec<usize> =
        (0..n).map(|j| if j == axis { r.random_range(0..counts[j] - 1) } else { r.random_range(0..counts[j]) }).collect();
    let face = Face::new(Cell(idx), axis, &part).unwrap();
    (part, face)
}

/// Explicit delay line over `y` symbols with memory `k`, carrying a hidden
/// parity bit that flips on every odd input symbol. Returns the system and
/// its partition by visible window.
pub fn delay_chain(y: usize, k: usize) -> (TransitionSystem, StatePartition) {
    let windows = y.pow(k as u32);
    let mut names = Vec::new();
    let mut out = Vec::new();
    let mut edges = Vec::new();
    let mut blocks = Vec::new();
    for w in 0..windows {
        let digits: Vec<usize> = (0..k).map(|i| (w / y.pow((k - 1 - i) as u32)) % y).collect();
        for z in 0..2 {
            names.push(format!("{digits:?}/{z}"));
            out.push(digits[0]);
            blocks.push(w);
            for a in 0..y {
                let mut next: Vec<usize> = digits[1..].to_vec();
                next.push(a);
                let nw = next.iter().fold(0, |acc, d| acc * y + d);
                edges.push((2 * w + z, 2 * nw + (z ^ (a & 1))));
            }
        }
    }
    let outputs = (0..y).map(|i| format!("y{i}")).collect();
    (TransitionSystem::new(names, outputs, out, edges).unwrap(), StatePartition::new(blocks).unwrap())
}

/// Whether the BMC verdict at bound `k` is "violated", after checking the
/// witness replays in `ts` and satisfies the negated formula.
pub fn bmc_violated(ts: &TransitionSystem, phi: &Ltl, k: usize) -> Result<bool, String> {
    use vulnscope::ltl::{bmc_check, BmcOutcome, SolverConfig};
    let (outcome, _) = bmc_check(ts, phi, k, &SolverConfig::default()).map_err(|e| e.to_string())?;
    match outcome {
        BmcOutcome::Violated(w) => {
            if w.states.len() != k + 1 {
                return Err(format!("witness has {} states at bound {k}", w.states.len()));
            }
            if !ts.initial_states().contains(&w.states[0]) {
                return Err("witness does not start in an initial state".into());
            }
            if w.states.windows(2).any(|p| !ts.has_edge(p[0], p[1])) {
                return Err("witness does not replay".into());
            }
            if let (Some(l), Some(t)) = (w.trace.loop_back, w.loop_target) {
                let bis = naive_bisimilar(ts);
                if !ts.has_edge(w.states[k], t) || !bis[t][w.states[l]] {
                    return Err("lasso does not close".into());
                }
            }
            if !eval_trace(&phi.clone().not(), &w.trace) {
                return Err("witness satisfies the formula".into());
            }
            Ok(true)
        }
        BmcOutcome::HoldsAtBound => Ok(false),
        BmcOutcome::Timeout => Err("solver timed out".into()),
    }
}

pub fn is_deadlock_free(ts: &TransitionSystem) -> bool {
    (0..ts.num_states()).all(|s| !ts.is_deadlock(s))
}
