//! Trace semantics.
//!
//! A lasso denotes the infinite word `w_0 .. w_{l-1} (w_l .. w_{n-1})^omega`
//! and is evaluated with the usual infinite-word semantics. A loop-free trace
//! is evaluated pessimistically on the negation normal form: `X` past the end
//! is false, `U` must be fulfilled inside the trace, and `R` must be released
//! inside the trace. A loop-free trace satisfying a formula therefore
//! satisfies it on every infinite extension.

use serde::{Deserialize, Serialize};

use super::formula::{Atom, Ltl, Nnf};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub q: String,
    pub k: String,
    /// Name of the abstract state the step was read from, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abstract_state: Option<String>,
}

impl TraceStep {
    pub fn new(q: &str, k: &str) -> Self {
        Self { q: q.to_string(), k: k.to_string(), abstract_state: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loop_back: Option<usize>,
}

impl Trace {
    pub fn finite(steps: Vec<TraceStep>) -> Self {
        Self { steps, loop_back: None }
    }

    pub fn lasso(steps: Vec<TraceStep>, loop_back: usize) -> Self {
        assert!(loop_back < steps.len(), "loop-back index out of range");
        Self { steps, loop_back: Some(loop_back) }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    fn holds(&self, atom: &Atom) -> Vec<bool> {
        self.steps.iter().map(|s| atom.matches(&s.q, &s.k)).collect()
    }

    /// CSV with header `step,q,k,abstract_state,loop_back`; the last column
    /// is `1` on the step the lasso returns to.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["step", "q", "k", "abstract_state", "loop_back"]).expect("in-memory write");
        for (i, s) in self.steps.iter().enumerate() {
            let lb = if self.loop_back == Some(i) { "1" } else { "0" };
            let i = i.to_string();
            let state = s.abstract_state.as_deref().unwrap_or("");
            w.write_record([i.as_str(), &s.q, &s.k, state, lb]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Truth of `phi` at position 0 of `trace`. An empty trace satisfies nothing.
pub fn eval_trace(phi: &Ltl, trace: &Trace) -> bool {
    if trace.is_empty() {
        return false;
    }
    match trace.loop_back {
        Some(l) => eval_lasso(phi, trace, l)[0],
        None => eval_pessimistic(&phi.to_nnf(), trace)[0],
    }
}

fn eval_lasso(phi: &Ltl, trace: &Trace, l: usize) -> Vec<bool> {
    let n = trace.len();
    let succ = |i: usize| if i + 1 < n { i + 1 } else { l };
    match phi {
        Ltl::True => vec![true; n],
        Ltl::False => vec![false; n],
        Ltl::Atom(a) => trace.holds(a),
        Ltl::Not(a) => eval_lasso(a, trace, l).into_iter().map(|v| !v).collect(),
        Ltl::Or(a, b) => {
            let (a, b) = (eval_lasso(a, trace, l), eval_lasso(b, trace, l));
            a.iter().zip(&b).map(|(x, y)| *x || *y).collect()
        }
        Ltl::Next(a) => {
            let a = eval_lasso(a, trace, l);
            (0..n).map(|i| a[succ(i)]).collect()
        }
        Ltl::Until(a, b) => {
            let (a, b) = (eval_lasso(a, trace, l), eval_lasso(b, trace, l));
            // least fixpoint: n backward sweeps reach it
            let mut u = b.clone();
            for _ in 0..=n {
                let mut changed = false;
                for i in (0..n).rev() {
                    let v = b[i] || (a[i] && u[succ(i)]);
                    changed |= v != u[i];
                    u[i] = v;
                }
                if !changed {
                    break;
                }
            }
            u
        }
    }
}

fn eval_pessimistic(phi: &Nnf, trace: &Trace) -> Vec<bool> {
    let n = trace.len();
    match phi {
        Nnf::True => vec![true; n],
        Nnf::False => vec![false; n],
        Nnf::Atom(a) => trace.holds(a),
        Nnf::NegAtom(a) => trace.holds(a).into_iter().map(|v| !v).collect(),
        Nnf::And(a, b) | Nnf::Or(a, b) => {
            let (x, y) = (eval_pessimistic(a, trace), eval_pessimistic(b, trace));
            let and = matches!(phi, Nnf::And(..));
            x.iter().zip(&y).map(|(p, q)| if and { *p && *q } else { *p || *q }).collect()
        }
        Nnf::Next(a) => {
            let a = eval_pessimistic(a, trace);
            (0..n).map(|i| i + 1 < n && a[i + 1]).collect()
        }
        Nnf::Until(a, b) | Nnf::Release(a, b) => {
            let (a, b) = (eval_pessimistic(a, trace), eval_pessimistic(b, trace));
            let until = matches!(phi, Nnf::Until(..));
            let mut out = vec![false; n];
            let mut next = false;
            for i in (0..n).rev() {
                out[i] = if until { b[i] || (a[i] && next) } else { b[i] && (a[i] || next) };
                next = out[i];
            }
            out
        }
    }
}
