//! Build the abstraction, search for a bounded counterexample, and report.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::hds::compose_abstraction;
use crate::ltl::{bmc_check, eval_trace, BmcOutcome, Ltl, SolverConfig, Trace, TraceStep};
use crate::model::{compile, CompiledModel, ModelFile};
use crate::ts::{coarsest_bisimulation, StateId, TransitionSystem};

pub const REPORT_SCHEMA: &str = "vulnscope-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "vulnerable")]
    Vulnerable,
    #[serde(rename = "not-vulnerable-at-bound")]
    NotVulnerableAtBound,
    #[serde(rename = "timeout")]
    Timeout,
}

impl Verdict {
    /// Process exit status for the verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::NotVulnerableAtBound => 0,
            Verdict::Vulnerable => 1,
            Verdict::Timeout => 3,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Vulnerable => "vulnerable",
            Verdict::NotVulnerableAtBound => "not-vulnerable-at-bound",
            Verdict::Timeout => "timeout",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub steps: Vec<TraceStep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_back: Option<usize>,
    /// Abstract state actually entered when the lasso closes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_target: Option<String>,
}

impl WitnessReport {
    pub fn trace(&self) -> Trace {
        Trace { steps: self.steps.clone(), loop_back: self.loop_back }
    }
}

/// Cell or slice centres along the witness. Not validated: nothing says a
/// continuous trajectory follows these points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcretizedPath {
    pub validated: bool,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub states: usize,
    pub edges: usize,
    pub bounds_checked: Vec<usize>,
    pub cnf_vars: usize,
    pub cnf_clauses: usize,
    pub conflicts: u64,
    pub decisions: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abstraction_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssessmentReport {
    pub schema: String,
    pub spec: String,
    pub formula: String,
    pub verdict: Verdict,
    pub bound: usize,
    pub witness: Option<WitnessReport>,
    pub concretized_path: Option<ConcretizedPath>,
    pub statistics: Statistics,
}

impl AssessmentReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct AssessOptions {
    pub bound: usize,
    /// When set, try every bound from `bound` up to this one and stop at the
    /// first counterexample.
    pub bound_max: Option<usize>,
    pub timing: bool,
    pub solver: SolverConfig,
}

impl AssessOptions {
    pub fn new(bound: usize) -> Self {
        Self { bound, bound_max: None, timing: true, solver: SolverConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Abstraction,
    Composition,
    Specification,
    Checking,
    WitnessValidation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Abstraction => "abstraction",
            Stage::Composition => "composition",
            Stage::Specification => "specification",
            Stage::Checking => "bounded model checking",
            Stage::WitnessValidation => "witness validation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

fn at<E: fmt::Display>(stage: Stage) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError { stage, message: e.to_string() }
}

/// Replays `trace` in `ts` from scratch: initial state, every transition, the
/// loop closure up to bisimulation, and the violation of `phi`.
pub fn validate_witness(ts: &TransitionSystem, phi: &Ltl, trace: &Trace) -> Result<Vec<StateId>, String> {
    let states = trace
        .steps
        .iter()
        .map(|s| {
            let name = s.abstract_state.as_deref().ok_or("step without abstract state")?;
            ts.state_by_name(name).ok_or_else(|| format!("unknown abstract state `{name}`"))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let first = *states.first().ok_or("empty witness")?;
    if !ts.initial_states().contains(&first) {
        return Err(format!("`{}` is not an initial state", ts.name(first)));
    }
    for (i, w) in states.windows(2).enumerate() {
        if !ts.has_edge(w[0], w[1]) {
            return Err(format!("step {i}: no transition {} -> {}", ts.name(w[0]), ts.name(w[1])));
        }
    }
    for (s, step) in states.iter().zip(&trace.steps) {
        if ts.output(*s) != format!("({},{})", step.q, step.k) {
            return Err(format!("step label ({},{}) differs from the output of `{}`", step.q, step.k, ts.name(*s)));
        }
    }
    if let Some(l) = trace.loop_back {
        let part = coarsest_bisimulation(ts);
        let last = *states.last().expect("non-empty");
        if !ts.successors(last).iter().any(|&t| part.block(t) == part.block(states[l])) {
            return Err("the lasso does not close".into());
        }
    }
    if !eval_trace(&phi.clone().not(), trace) {
        return Err("the trace does not violate the specification".into());
    }
    Ok(states)
}

/// Centres of the abstract states along a witness, when every mode visited
/// has a geometric plant.
pub fn concretize_witness(witness: &WitnessReport, compiled: &CompiledModel, ts: &TransitionSystem) -> Option<ConcretizedPath> {
    let points = witness
        .steps
        .iter()
        .map(|s| {
            let id = ts.state_by_name(s.abstract_state.as_deref()?)?;
            let hs = compiled.hybrid.product_state(id);
            compiled.region(hs.q, hs.y).map(|r| r.center.clone())
        })
        .collect::<Option<Vec<_>>>()?;
    Some(ConcretizedPath { validated: false, points })
}

fn millis(t: Instant) -> f64 {
    (t.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

pub fn assess(model: &ModelFile, spec: &str, opts: &AssessOptions) -> Result<AssessmentReport, PipelineError> {
    let t0 = Instant::now();
    let text = model.spec(spec).map_err(at(Stage::Specification))?;
    let compiled = compile(model).map_err(at(Stage::Abstraction))?;
    let phi = compiled.parse_spec(spec, text).map_err(at(Stage::Specification))?;
    let ts = compose_abstraction(&compiled.hybrid).map_err(at(Stage::Composition))?;
    let abstraction_ms = millis(t0);
    assess_compiled(&compiled, &ts, spec, text, &phi, opts, abstraction_ms)
}

pub fn assess_compiled(
    compiled: &CompiledModel,
    ts: &TransitionSystem,
    spec: &str,
    text: &str,
    phi: &Ltl,
    opts: &AssessOptions,
    abstraction_ms: f64,
) -> Result<AssessmentReport, PipelineError> {
    if opts.bound == 0 {
        return Err(PipelineError { stage: Stage::Checking, message: "the bound must be at least 1".into() });
    }
    let last = opts.bound_max.unwrap_or(opts.bound).max(opts.bound);
    let t1 = Instant::now();
    let mut stats = Statistics {
        states: ts.num_states(),
        edges: ts.num_edges(),
        bounds_checked: Vec::new(),
        cnf_vars: 0,
        cnf_clauses: 0,
        conflicts: 0,
        decisions: 0,
        abstraction_ms: opts.timing.then_some(abstraction_ms),
        solve_ms: None,
    };
    let mut verdict = Verdict::NotVulnerableAtBound;
    let mut witness = None;
    let mut bound = opts.bound;
    for k in opts.bound..=last {
        bound = k;
        let (outcome, s) = bmc_check(ts, phi, k, &opts.solver).map_err(at(Stage::Checking))?;
        stats.bounds_checked.push(k);
        stats.cnf_vars = s.vars;
        stats.cnf_clauses = s.clauses;
        stats.conflicts += s.solver.conflicts;
        stats.decisions += s.solver.decisions;
        match outcome {
            BmcOutcome::HoldsAtBound => continue,
            BmcOutcome::Timeout => {
                verdict = Verdict::Timeout;
                break;
            }
            BmcOutcome::Violated(w) => {
                validate_witness(ts, phi, &w.trace).map_err(at(Stage::WitnessValidation))?;
                verdict = Verdict::Vulnerable;
                witness = Some(WitnessReport {
                    steps: w.trace.steps.clone(),
                    loop_back: w.trace.loop_back,
                    loop_target: w.loop_target.map(|t| ts.name(t).to_string()),
                });
                break;
            }
        }
    }
    if opts.timing {
        stats.solve_ms = Some(millis(t1));
    }
    let concretized_path = witness.as_ref().and_then(|w| concretize_witness(w, compiled, ts));
    Ok(AssessmentReport {
        schema: REPORT_SCHEMA.into(),
        spec: spec.into(),
        formula: text.into(),
        verdict,
        bound,
        witness,
        concretized_path,
        statistics: stats,
    })
}
