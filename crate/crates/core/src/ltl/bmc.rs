//! Bounded model checking: `[T, phi]_k` as CNF.
//!
//! Variable numbering for a system with `S` states and bound `k`:
//!
//! * `x(i, s) = 1 + i*S + s` for steps `i` in `0..=k`: state `s` at step `i`.
//! * `L(l) = 1 + (k+1)*S + l` for `l` in `0..=k`: the path loops back to `l`.
//! * everything above is auxiliary (one-hot counters, atom and subformula
//!   definitions, loop-closure classes) and carries no fixed meaning.
//!
//! A path has `k` transitions. It witnesses `!phi` either loop-free, under the
//! pessimistic bounded semantics, or as a lasso under infinite semantics. The
//! lasso closes when the last state has a successor bisimilar to the state at
//! the loop point, so the infinite word it denotes is the output trace of a
//! real path and verdicts are invariant under bisimulation.

use sha2::{Digest, Sha256};

use super::cnf::{Cnf, Lit};
use super::formula::{Atom, Ltl, Nnf};
use super::parse::split_output;
use super::sat::{sat_solve_with, SatResult, SolveStats, SolverConfig};
use super::trace::{eval_trace, Trace, TraceStep};
use super::LtlError;
use crate::ts::{coarsest_bisimulation, StateId, TransitionSystem};

/// Constant-folded literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum B {
    T,
    F,
    L(Lit),
}

impl B {
    fn not(self) -> B {
        match self {
            B::T => B::F,
            B::F => B::T,
            B::L(l) => B::L(-l),
        }
    }

    fn eval(self, model: &[bool]) -> bool {
        match self {
            B::T => true,
            B::F => false,
            B::L(l) => super::cnf::lit_value(model, l),
        }
    }
}

struct Gates {
    cnf: Cnf,
}

impl Gates {
    fn or(&mut self, a: B, b: B) -> B {
        match (a, b) {
            (B::T, _) | (_, B::T) => B::T,
            (B::F, x) | (x, B::F) => x,
            (B::L(x), B::L(y)) if x == y => a,
            (B::L(x), B::L(y)) if x == -y => B::T,
            (B::L(x), B::L(y)) => {
                let g = self.cnf.new_var();
                self.cnf.add_clause(vec![-g, x, y]);
                self.cnf.add_clause(vec![g, -x]);
                self.cnf.add_clause(vec![g, -y]);
                B::L(g)
            }
        }
    }

    fn and(&mut self, a: B, b: B) -> B {
        self.or(a.not(), b.not()).not()
    }

    /// Fresh variable equivalent to the disjunction of `lits`.
    fn or_many(&mut self, lits: &[Lit]) -> B {
        match lits {
            [] => B::F,
            [l] => B::L(*l),
            _ => {
                let g = self.cnf.new_var();
                let mut big = vec![-g];
                big.extend_from_slice(lits);
                self.cnf.add_clause(big);
                for &l in lits {
                    self.cnf.add_clause(vec![g, -l]);
                }
                B::L(g)
            }
        }
    }
}

/// The CNF together with what is needed to read a witness back.
#[derive(Debug, Clone)]
pub struct BmcEncoding {
    pub cnf: Cnf,
    pub bound: usize,
    pub num_states: usize,
    negated: Ltl,
    no_loop_top: B,
    loop_top: Vec<B>,
    classes: Vec<usize>,
    digest: String,
}

impl BmcEncoding {
    pub fn state_var(&self, step: usize, state: StateId) -> Lit {
        (1 + step * self.num_states + state) as Lit
    }

    pub fn loop_var(&self, l: usize) -> Lit {
        (1 + (self.bound + 1) * self.num_states + l) as Lit
    }

    /// First 16 hex digits of the SHA-256 of the variable map description.
    pub fn varmap_digest(&self) -> &str {
        &self.digest
    }

    pub fn to_dimacs(&self) -> String {
        self.cnf.to_dimacs(Some(&self.digest))
    }
}

/// States whose output `(q,k)` satisfies `atom`.
pub fn atom_states(ts: &TransitionSystem, atom: &Atom) -> Vec<StateId> {
    (0..ts.num_states())
        .filter(|&s| split_output(ts.output(s)).is_some_and(|(q, k)| atom.matches(q, k)))
        .collect()
}

fn check_alphabet(ts: &TransitionSystem, phi: &Ltl) -> Result<(), LtlError> {
    for atom in phi.atoms() {
        let known = ts.outputs().iter().any(|o| split_output(o).is_some_and(|(q, k)| atom.matches(q, k)));
        if !known {
            return Err(LtlError::AlphabetMismatch { atom: atom.to_string() });
        }
    }
    Ok(())
}

struct Encoder<'a> {
    g: Gates,
    ts: &'a TransitionSystem,
    k: usize,
    atoms: Vec<(Atom, Vec<B>)>,
}

impl Encoder<'_> {
    fn x(&self, i: usize, s: StateId) -> Lit {
        (1 + i * self.ts.num_states() + s) as Lit
    }

    fn atom(&mut self, a: &Atom) -> Vec<B> {
        if let Some((_, v)) = self.atoms.iter().find(|(b, _)| b == a) {
            return v.clone();
        }
        let states = atom_states(self.ts, a);
        let v: Vec<B> = (0..=self.k)
            .map(|i| {
                let lits: Vec<Lit> = states.iter().map(|&s| self.x(i, s)).collect();
                self.g.or_many(&lits)
            })
            .collect();
        self.atoms.push((a.clone(), v.clone()));
        v
    }

    /// Values of `f` at steps `0..=k`; `loop_to = None` is the loop-free case.
    fn formula(&mut self, f: &Nnf, loop_to: Option<usize>) -> Vec<B> {
        let k = self.k;
        match f {
            Nnf::True => vec![B::T; k + 1],
            Nnf::False => vec![B::F; k + 1],
            Nnf::Atom(a) => self.atom(a),
            Nnf::NegAtom(a) => self.atom(a).into_iter().map(B::not).collect(),
            Nnf::And(a, b) | Nnf::Or(a, b) => {
                let (x, y) = (self.formula(a, loop_to), self.formula(b, loop_to));
                let and = matches!(f, Nnf::And(..));
                (0..=k).map(|i| if and { self.g.and(x[i], y[i]) } else { self.g.or(x[i], y[i]) }).collect()
            }
            Nnf::Next(a) => {
                let x = self.formula(a, loop_to);
                (0..=k)
                    .map(|i| {
                        if i < k {
                            x[i + 1]
                        } else {
                            loop_to.map_or(B::F, |l| x[l])
                        }
                    })
                    .collect()
            }
            Nnf::Until(a, b) | Nnf::Release(a, b) => {
                let (x, y) = (self.formula(a, loop_to), self.formula(b, loop_to));
                let until = matches!(f, Nnf::Until(..));
                // u_i = y_i | (x_i & u_{i+1});  r_i = y_i & (x_i | r_{i+1})
                let step = |g: &mut Gates, i: usize, next: B| {
                    if until {
                        let t = g.and(x[i], next);
                        g.or(y[i], t)
                    } else {
                        let t = g.or(x[i], next);
                        g.and(y[i], t)
                    }
                };
                let after_k = match loop_to {
                    None => B::F,
                    Some(l) => {
                        let mut second = y[k];
                        for j in (l..k).rev() {
                            second = step(&mut self.g, j, second);
                        }
                        second
                    }
                };
                let mut out = vec![B::F; k + 1];
                let mut next = after_k;
                for i in (0..=k).rev() {
                    out[i] = step(&mut self.g, i, next);
                    next = out[i];
                }
                out
            }
        }
    }
}

/// Encodes "some `k`-step path of `ts` from an initial state violates `phi`".
pub fn encode_bmc(ts: &TransitionSystem, phi: &Ltl, k: usize) -> Result<BmcEncoding, LtlError> {
    if k == 0 {
        return Err(LtlError::Bound);
    }
    check_alphabet(ts, phi)?;
    let n = ts.num_states();
    let base = (k + 1) * n + (k + 1);
    let mut enc = Encoder { g: Gates { cnf: Cnf::new(base) }, ts, k, atoms: Vec::new() };

    for i in 0..=k {
        let lits: Vec<Lit> = (0..n).map(|s| enc.x(i, s)).collect();
        enc.g.cnf.add_clause(lits.clone());
        // sequential-counter at-most-one
        let mut prev: Option<Lit> = None;
        for (j, &l) in lits.iter().enumerate() {
            if let Some(r) = prev {
                enc.g.cnf.add_clause(vec![-l, -r]);
            }
            if j + 1 < lits.len() {
                let r = enc.g.cnf.new_var();
                enc.g.cnf.add_clause(vec![-l, r]);
                if let Some(p) = prev {
                    enc.g.cnf.add_clause(vec![-p, r]);
                }
                prev = Some(r);
            }
        }
    }
    for i in 0..k {
        for s in 0..n {
            let mut c = vec![-enc.x(i, s)];
            c.extend(ts.successors(s).iter().map(|&t| enc.x(i + 1, t)));
            enc.g.cnf.add_clause(c);
        }
    }
    let init: Vec<Lit> = ts.initial_states().iter().map(|&s| enc.x(0, s)).collect();
    if init.is_empty() {
        let v = enc.g.cnf.new_var();
        enc.g.cnf.add_clause(vec![v]);
        enc.g.cnf.add_clause(vec![-v]);
    } else {
        enc.g.cnf.add_clause(init);
    }

    let part = coarsest_bisimulation(ts);
    let classes = part.blocks().to_vec();
    let class_count = part.block_count();
    let mut next_class = Vec::with_capacity(class_count);
    for c in 0..class_count {
        let pre: Vec<Lit> = (0..n)
            .filter(|&s| ts.successors(s).iter().any(|&t| classes[t] == c))
            .map(|s| enc.x(k, s))
            .collect();
        let v = enc.g.cnf.new_var();
        let mut clause = vec![-v];
        clause.extend(pre);
        enc.g.cnf.add_clause(clause);
        next_class.push(v);
    }
    for l in 0..=k {
        let sel = (1 + (k + 1) * n + l) as Lit;
        for s in 0..n {
            enc.g.cnf.add_clause(vec![-sel, -enc.x(l, s), next_class[classes[s]]]);
        }
    }

    let negated = phi.clone().not();
    let nnf = negated.to_nnf();
    let no_loop_top = enc.formula(&nnf, None)[0];
    let loop_top: Vec<B> = (0..=k).map(|l| enc.formula(&nnf, Some(l))[0]).collect();
    let mut top = Vec::new();
    match no_loop_top {
        B::T => top.push(None),
        B::F => {}
        B::L(x) => top.push(Some(x)),
    }
    for (l, &t) in loop_top.iter().enumerate() {
        let sel = B::L((1 + (k + 1) * n + l) as Lit);
        match enc.g.and(sel, t) {
            B::T => top.push(None),
            B::F => {}
            B::L(x) => top.push(Some(x)),
        }
    }
    if !top.contains(&None) {
        if top.is_empty() {
            let v = enc.g.cnf.new_var();
            enc.g.cnf.add_clause(vec![v]);
            enc.g.cnf.add_clause(vec![-v]);
        } else {
            enc.g.cnf.add_clause(top.into_iter().flatten().collect());
        }
    }

    let mut h = Sha256::new();
    h.update(format!("vulnscope-bmc/1 states={n} bound={k}\n"));
    for s in 0..n {
        h.update(format!("{s} {} {}\n", ts.name(s), ts.output(s)));
    }
    h.update(format!("phi {phi}\n"));
    let digest: String = h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();

    Ok(BmcEncoding { cnf: enc.g.cnf, bound: k, num_states: n, negated, no_loop_top, loop_top, classes, digest })
}

/// A decoded, re-validated counterexample.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub assignment: Vec<bool>,
    pub states: Vec<StateId>,
    pub trace: Trace,
    /// For a lasso: the successor of the last state the loop actually takes;
    /// it is bisimilar to the state at the loop point.
    pub loop_target: Option<StateId>,
}

pub fn trace_of_states(ts: &TransitionSystem, states: &[StateId], loop_back: Option<usize>) -> Trace {
    let steps = states
        .iter()
        .map(|&s| {
            let (q, k) = split_output(ts.output(s)).unwrap_or((ts.output(s), ""));
            TraceStep { q: q.to_string(), k: k.to_string(), abstract_state: Some(ts.name(s).to_string()) }
        })
        .collect();
    Trace { steps, loop_back }
}

/// Reads the path out of a satisfying assignment and checks it against the
/// system and the negated formula.
pub fn decode_witness(enc: &BmcEncoding, ts: &TransitionSystem, assignment: &[bool]) -> Result<Witness, LtlError> {
    let bug = |m: String| Err(LtlError::MalformedWitness(m));
    if !enc.cnf.is_satisfied_by(assignment) {
        return bug("assignment does not satisfy the encoding".into());
    }
    let mut states = Vec::with_capacity(enc.bound + 1);
    for i in 0..=enc.bound {
        let on: Vec<StateId> =
            (0..enc.num_states).filter(|&s| assignment[enc.state_var(i, s) as usize - 1]).collect();
        if on.len() != 1 {
            return bug(format!("step {i} has {} active states", on.len()));
        }
        states.push(on[0]);
    }
    let loop_back = if enc.no_loop_top.eval(assignment) {
        None
    } else {
        let l = (0..=enc.bound)
            .find(|&l| assignment[enc.loop_var(l) as usize - 1] && enc.loop_top[l].eval(assignment));
        match l {
            Some(l) => Some(l),
            None => return bug("no satisfied case of the top-level disjunction".into()),
        }
    };
    if !ts.initial_states().contains(&states[0]) {
        return bug(format!("state `{}` is not initial", ts.name(states[0])));
    }
    for w in states.windows(2) {
        if !ts.has_edge(w[0], w[1]) {
            return bug(format!("no transition {} -> {}", ts.name(w[0]), ts.name(w[1])));
        }
    }
    let loop_target = match loop_back {
        None => None,
        Some(l) => {
            let last = states[enc.bound];
            let target = ts.successors(last).iter().copied().find(|&t| enc.classes[t] == enc.classes[states[l]]);
            match target {
                Some(t) => Some(t),
                None => return bug("loop does not close".into()),
            }
        }
    };
    let trace = trace_of_states(ts, &states, loop_back);
    if !eval_trace(&enc.negated, &trace) {
        return bug("decoded trace does not violate the formula".into());
    }
    Ok(Witness { assignment: assignment.to_vec(), states, trace, loop_target })
}

#[derive(Debug, Clone, PartialEq)]
pub enum BmcOutcome {
    Violated(Box<Witness>),
    HoldsAtBound,
    Timeout,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BmcStats {
    pub vars: usize,
    pub clauses: usize,
    pub solver: SolveStats,
}

/// Encode, solve and decode in one call.
pub fn bmc_check(
    ts: &TransitionSystem,
    phi: &Ltl,
    k: usize,
    config: &SolverConfig,
) -> Result<(BmcOutcome, BmcStats), LtlError> {
    let enc = encode_bmc(ts, phi, k)?;
    let (result, solver) = sat_solve_with(&enc.cnf, config);
    let stats = BmcStats { vars: enc.cnf.num_vars(), clauses: enc.cnf.num_clauses(), solver };
    let outcome = match result {
        SatResult::Sat(model) => BmcOutcome::Violated(Box::new(decode_witness(&enc, ts, &model)?)),
        SatResult::Unsat => BmcOutcome::HoldsAtBound,
        SatResult::Timeout => BmcOutcome::Timeout,
    };
    Ok((outcome, stats))
}
