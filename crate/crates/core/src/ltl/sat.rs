//! Conflict-driven clause-learning SAT solver.
//!
//! Two watched literals with blockers, first-UIP learning with local
//! minimisation, VSIDS on an indexed heap, phase saving, geometric restarts
//! and activity-based deletion of learnt clauses. All randomness comes from a
//! seeded ChaCha stream, so runs are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cnf::Cnf;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub seed: u64,
    /// Probability that a decision picks a random variable.
    pub random_decision_freq: f64,
    /// Give up with [`SatResult::Timeout`] after this many conflicts.
    pub conflict_limit: Option<u64>,
    pub restart_first: u64,
    pub restart_factor: f64,
    pub var_decay: f64,
    pub clause_decay: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            random_decision_freq: 0.02,
            conflict_limit: None,
            restart_first: 100,
            restart_factor: 1.5,
            var_decay: 0.95,
            clause_decay: 0.999,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// `model[v - 1]` is the value of variable `v`.
    Sat(Vec<bool>),
    Unsat,
    Timeout,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts: u64,
    pub learnt_clauses: u64,
}

pub fn sat_solve(cnf: &Cnf) -> SatResult {
    sat_solve_with(cnf, &SolverConfig::default()).0
}

pub fn sat_solve_with(cnf: &Cnf, config: &SolverConfig) -> (SatResult, SolveStats) {
    let mut s = Solver::new(cnf.num_vars(), config);
    let result = s.load(cnf).map_or(SatResult::Unsat, |_| s.search());
    (result, s.stats)
}

const TRUE: u8 = 1;
const FALSE: u8 = 0;
const UNDEF: u8 = 2;

type L = u32;

fn lit_of(l: i32) -> L {
    let v = l.unsigned_abs() - 1;
    2 * v + u32::from(l < 0)
}

fn var(l: L) -> usize {
    (l >> 1) as usize
}

#[derive(Clone, Copy)]
struct Watch {
    cref: u32,
    blocker: L,
}

struct Clause {
    lits: Vec<L>,
    learnt: bool,
    activity: f64,
}

struct Heap {
    heap: Vec<usize>,
    index: Vec<Option<usize>>,
}

impl Heap {
    fn new(n: usize) -> Self {
        Self { heap: Vec::with_capacity(n), index: vec![None; n] }
    }

    fn contains(&self, v: usize) -> bool {
        self.index[v].is_some()
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[parent]] >= act[v] {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.index[self.heap[i]] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.index[v] = Some(i);
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && act[self.heap[r]] > act[self.heap[l]] { r } else { l };
            if act[self.heap[child]] <= act[v] {
                break;
            }
            self.heap[i] = self.heap[child];
            self.index[self.heap[i]] = Some(i);
            i = child;
        }
        self.heap[i] = v;
        self.index[v] = Some(i);
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.index[v] = Some(i);
        self.up(i, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.index[top] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.index[last] = Some(0);
            self.down(0, act);
        }
        Some(top)
    }
}

struct Solver<'a> {
    config: &'a SolverConfig,
    n: usize,
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watch>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: Heap,
    trail: Vec<L>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    rng: ChaCha8Rng,
    stats: SolveStats,
    learnt_count: usize,
}

impl<'a> Solver<'a> {
    fn new(n: usize, config: &'a SolverConfig) -> Self {
        let activity = vec![0.0; n];
        let mut heap = Heap::new(n);
        for v in 0..n {
            heap.insert(v, &activity);
        }
        Self {
            config,
            n,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![UNDEF; n],
            level: vec![0; n],
            reason: vec![None; n],
            polarity: vec![false; n],
            activity,
            var_inc: 1.0,
            cla_inc: 1.0,
            heap,
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: vec![false; n],
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            stats: SolveStats::default(),
            learnt_count: 0,
        }
    }

    fn value(&self, l: L) -> u8 {
        let a = self.assigns[var(l)];
        if a == UNDEF { UNDEF } else { a ^ (l & 1) as u8 }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: L, reason: Option<u32>) {
        let v = var(l);
        self.assigns[v] = if l & 1 == 0 { TRUE } else { FALSE };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, cref: u32) {
        let c = &self.clauses[cref as usize];
        let (a, b) = (c.lits[0], c.lits[1]);
        self.watches[(a ^ 1) as usize].push(Watch { cref, blocker: b });
        self.watches[(b ^ 1) as usize].push(Watch { cref, blocker: a });
    }

    /// Returns `None` when the clause set is trivially unsatisfiable.
    fn load(&mut self, cnf: &Cnf) -> Option<()> {
        let mut units = Vec::new();
        for clause in cnf.clauses() {
            let mut lits: Vec<L> = clause.iter().map(|&l| lit_of(l)).collect();
            lits.sort_unstable();
            lits.dedup();
            if lits.windows(2).any(|w| w[0] ^ 1 == w[1]) {
                continue;
            }
            if lits.len() == 1 {
                units.push(lits[0]);
                continue;
            }
            let cref = self.clauses.len() as u32;
            self.clauses.push(Clause { lits, learnt: false, activity: 0.0 });
            self.attach(cref);
        }
        for u in units {
            match self.value(u) {
                FALSE => return None,
                UNDEF => self.enqueue(u, None),
                _ => {}
            }
        }
        self.propagate().is_none().then_some(())
    }

    /// Unit propagation; returns a conflicting clause if one arises.
    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[p as usize]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                let nw = Watch { cref: w.cref, blocker: first };
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != FALSE {
                        let lits = &mut self.clauses[cref].lits;
                        lits[1] = l;
                        lits[k] = false_lit;
                        self.watches[(l ^ 1) as usize].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if self.value(first) == FALSE {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[p as usize] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        if let Some(i) = self.heap.index[v] {
            self.heap.up(i, &self.activity);
        }
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<L>, u32) {
        let mut learnt: Vec<L> = vec![0];
        let mut path = 0usize;
        let mut p: Option<L> = None;
        let mut idx = self.trail.len();
        let dl = self.decision_level();
        loop {
            self.bump_clause(confl as usize);
            let start = usize::from(p.is_some());
            for j in start..self.clauses[confl as usize].lits.len() {
                let q = self.clauses[confl as usize].lits[j];
                let v = var(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[var(self.trail[idx])] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            self.seen[var(lit)] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[var(lit)].expect("implied literal has a reason");
        }
        learnt[0] = p.expect("conflict at positive level") ^ 1;

        let original: Vec<L> = learnt.clone();
        let mut kept = vec![learnt[0]];
        for &q in &learnt[1..] {
            let redundant = match self.reason[var(q)] {
                None => false,
                Some(r) => self.clauses[r as usize].lits[1..]
                    .iter()
                    .all(|&x| self.seen[var(x)] || self.level[var(x)] == 0),
            };
            if !redundant {
                kept.push(q);
            }
        }
        for &q in &original {
            self.seen[var(q)] = false;
        }
        let mut learnt = kept;
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for i in 2..learnt.len() {
                if self.level[var(learnt[i])] > self.level[var(learnt[best])] {
                    best = i;
                }
            }
            learnt.swap(1, best);
            bt = self.level[var(learnt[1])];
        }
        (learnt, bt)
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = var(l);
            self.assigns[v] = UNDEF;
            self.reason[v] = None;
            self.polarity[v] = l & 1 == 0;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = self.trail.len();
    }

    fn pick_branch(&mut self) -> Option<L> {
        if self.n > 0 && self.rng.random::<f64>() < self.config.random_decision_freq {
            let v = self.rng.random_range(0..self.n);
            if self.assigns[v] == UNDEF {
                return Some(2 * v as u32 + u32::from(!self.polarity[v]));
            }
        }
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v] == UNDEF {
                return Some(2 * v as u32 + u32::from(!self.polarity[v]));
            }
        }
        None
    }

    /// Drops the less active half of the learnt clauses. Only called at
    /// decision level 0, where no learnt clause is needed as a reason.
    fn reduce_db(&mut self) {
        for r in &mut self.reason {
            *r = None;
        }
        let mut learnt: Vec<(f64, usize)> = self
            .clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| c.learnt && c.lits.len() > 2)
            .map(|(i, c)| (c.activity, i))
            .collect();
        learnt.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut drop = vec![false; self.clauses.len()];
        for &(_, i) in &learnt[..learnt.len() / 2] {
            drop[i] = true;
        }
        let old = std::mem::take(&mut self.clauses);
        self.clauses = old.into_iter().zip(drop).filter(|(_, d)| !d).map(|(c, _)| c).collect();
        self.learnt_count = self.clauses.iter().filter(|c| c.learnt).count();
        for w in &mut self.watches {
            w.clear();
        }
        for cref in 0..self.clauses.len() as u32 {
            self.attach(cref);
        }
    }

    fn search(&mut self) -> SatResult {
        let mut restart_limit = self.config.restart_first as f64;
        let mut since_restart = 0u64;
        let mut max_learnts = (self.clauses.len() / 3).max(2000) as f64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                since_restart += 1;
                if self.decision_level() == 0 {
                    return SatResult::Unsat;
                }
                if self.config.conflict_limit.is_some_and(|cap| self.stats.conflicts > cap) {
                    return SatResult::Timeout;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let cref = self.clauses.len() as u32;
                    let asserting = learnt[0];
                    self.clauses.push(Clause { lits: learnt, learnt: true, activity: 0.0 });
                    self.bump_clause(cref as usize);
                    self.attach(cref);
                    self.learnt_count += 1;
                    self.stats.learnt_clauses += 1;
                    self.enqueue(asserting, Some(cref));
                }
                self.var_inc /= self.config.var_decay;
                self.cla_inc /= self.config.clause_decay;
            } else {
                if since_restart as f64 >= restart_limit {
                    since_restart = 0;
                    restart_limit *= self.config.restart_factor;
                    self.stats.restarts += 1;
                    self.cancel_until(0);
                    if self.learnt_count as f64 >= max_learnts {
                        self.reduce_db();
                        max_learnts *= 1.1;
                    }
                    continue;
                }
                match self.pick_branch() {
                    None => {
                        let model = self.assigns.iter().map(|&a| a == TRUE).collect();
                        return SatResult::Sat(model);
                    }
                    Some(l) => {
                        self.stats.decisions += 1;
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(l, None);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cnf(n: usize, clauses: &[&[i32]]) -> Cnf {
        let mut c = Cnf::new(n);
        for cl in clauses {
            c.add_clause(cl.to_vec());
        }
        c
    }

    #[test]
    fn tiny_examples() {
        match sat_solve(&cnf(2, &[&[1, 2], &[-1]])) {
            SatResult::Sat(m) => assert_eq!(m, vec![false, true]),
            other => panic!("{other:?}"),
        }
        assert_eq!(sat_solve(&cnf(1, &[&[1], &[-1]])), SatResult::Unsat);
        assert_eq!(sat_solve(&Cnf::new(0)), SatResult::Sat(vec![]));
        assert_eq!(sat_solve(&cnf(2, &[&[1, -1], &[2, 2]])), SatResult::Sat(vec![false, true]));
    }

    fn pigeonhole(holes: usize) -> Cnf {
        let pigeons = holes + 1;
        let v = |p: usize, h: usize| (p * holes + h + 1) as i32;
        let mut c = Cnf::new(pigeons * holes);
        for p in 0..pigeons {
            c.add_clause((0..holes).map(|h| v(p, h)).collect());
        }
        for h in 0..holes {
            for p in 0..pigeons {
                for q in p + 1..pigeons {
                    c.add_clause(vec![-v(p, h), -v(q, h)]);
                }
            }
        }
        c
    }

    #[test]
    fn pigeonhole_is_unsat_and_cap_times_out() {
        assert_eq!(sat_solve(&pigeonhole(6)), SatResult::Unsat);
        let cfg = SolverConfig { conflict_limit: Some(5), ..SolverConfig::default() };
        assert_eq!(sat_solve_with(&pigeonhole(7), &cfg).0, SatResult::Timeout);
    }

    #[test]
    fn deterministic_models() {
        let mut c = Cnf::new(30);
        for i in 1..30 {
            c.add_clause(vec![i, i + 1, -((i % 7) + 1)]);
        }
        assert_eq!(sat_solve(&c), sat_solve(&c));
        if let SatResult::Sat(m) = sat_solve(&c) {
            assert!(c.is_satisfied_by(&m));
        }
    }
}
