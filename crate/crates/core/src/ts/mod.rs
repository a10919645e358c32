//! Finite transition systems `(S, ->, Y, h)` and the quotient/bisimulation
//! machinery every abstraction produces and every checker consumes.
//!
//! States are dense integers `0..n`; every state also carries a display name
//! used by the DOT and JSON exports. Successor lists are kept sorted so that
//! iteration order (and therefore every export) is deterministic.

mod export;
mod partition;

pub use export::TsJson;
pub use partition::{
    check_bisimulation, check_quotient_condition, coarsest_bisimulation, quotient,
    BinaryRelation, StatePartition,
};

use std::collections::HashSet;

use thiserror::Error;

pub type StateId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TsError {
    #[error("transition system needs at least one state")]
    NoStates,
    #[error("transition system needs at least one output label")]
    NoOutputs,
    #[error("output map covers {got} states, expected {expected}")]
    OutputMapLength { expected: usize, got: usize },
    #[error("state {state} maps to output index {index}, but only {count} outputs exist")]
    OutputOutOfRange { state: usize, index: usize, count: usize },
    #[error("transition {from} -> {to} references a state outside 0..{count}")]
    EdgeOutOfRange { from: usize, to: usize, count: usize },
    #[error("initial state {0} is not a state of the system")]
    InitialOutOfRange(usize),
    #[error("duplicate state name `{0}`")]
    DuplicateName(String),
    #[error("unknown state name `{0}`")]
    UnknownState(String),
    #[error("unknown output label `{0}`")]
    UnknownOutput(String),
    #[error("partition covers {got} states, expected {expected}")]
    PartitionLength { expected: usize, got: usize },
    #[error("partition block {0} is empty or block ids are not contiguous")]
    EmptyBlock(usize),
    #[error("block {block} merges states with different outputs (`{first}` vs `{second}`)")]
    MixedOutputs { block: usize, first: String, second: String },
    #[error("malformed transition-system JSON: {0}")]
    Json(String),
}

/// A finite transition system with a total output map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    names: Vec<String>,
    successors: Vec<Vec<StateId>>,
    outputs: Vec<String>,
    output_map: Vec<usize>,
    initial: Option<Vec<StateId>>,
}

impl TransitionSystem {
    /// Builds a system from state names, output labels, the output index of
    /// every state and an edge list. Duplicate edges are collapsed.
    pub fn new(
        names: Vec<String>,
        outputs: Vec<String>,
        output_map: Vec<usize>,
        edges: impl IntoIterator<Item = (StateId, StateId)>,
    ) -> Result<Self, TsError> {
        let n = names.len();
        if n == 0 {
            return Err(TsError::NoStates);
        }
        if outputs.is_empty() {
            return Err(TsError::NoOutputs);
        }
        if output_map.len() != n {
            return Err(TsError::OutputMapLength { expected: n, got: output_map.len() });
        }
        for (state, &index) in output_map.iter().enumerate() {
            if index >= outputs.len() {
                return Err(TsError::OutputOutOfRange { state, index, count: outputs.len() });
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(TsError::DuplicateName(name.clone()));
            }
        }
        let mut successors = vec![Vec::new(); n];
        for (from, to) in edges {
            if from >= n || to >= n {
                return Err(TsError::EdgeOutOfRange { from, to, count: n });
            }
            successors[from].push(to);
        }
        for succ in &mut successors {
            succ.sort_unstable();
            succ.dedup();
        }
        Ok(Self { names, successors, outputs, output_map, initial: None })
    }

    /// Convenience constructor naming states `s0, s1, ...`.
    pub fn from_edges(
        outputs: Vec<String>,
        output_map: Vec<usize>,
        edges: impl IntoIterator<Item = (StateId, StateId)>,
    ) -> Result<Self, TsError> {
        let names = (0..output_map.len()).map(|i| format!("s{i}")).collect();
        Self::new(names, outputs, output_map, edges)
    }

    /// Restricts the admissible start states. `None` (the default) means every
    /// state may start a path.
    pub fn with_initial(mut self, initial: Option<Vec<StateId>>) -> Result<Self, TsError> {
        if let Some(init) = &initial {
            if let Some(&bad) = init.iter().find(|&&s| s >= self.num_states()) {
                return Err(TsError::InitialOutOfRange(bad));
            }
        }
        self.initial = initial.map(|mut v| {
            v.sort_unstable();
            v.dedup();
            v
        });
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn successors(&self, s: StateId) -> &[StateId] {
        &self.successors[s]
    }

    pub fn has_edge(&self, from: StateId, to: StateId) -> bool {
        self.successors[from].binary_search(&to).is_ok()
    }

    /// All edges in `(from, to)` lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.successors
            .iter()
            .enumerate()
            .flat_map(|(s, succ)| succ.iter().map(move |&t| (s, t)))
    }

    pub fn name(&self, s: StateId) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn output(&self, s: StateId) -> &str {
        &self.outputs[self.output_map[s]]
    }

    pub fn output_index(&self, s: StateId) -> usize {
        self.output_map[s]
    }

    pub fn output_map(&self) -> &[usize] {
        &self.output_map
    }

    /// The explicit initial set, if one was configured.
    pub fn initial(&self) -> Option<&[StateId]> {
        self.initial.as_deref()
    }

    /// Start states: the configured initial set, or every state.
    pub fn initial_states(&self) -> Vec<StateId> {
        match &self.initial {
            Some(init) => init.clone(),
            None => (0..self.num_states()).collect(),
        }
    }

    pub fn is_deadlock(&self, s: StateId) -> bool {
        self.successors[s].is_empty()
    }

    /// States reachable from the start states (breadth-first, sorted).
    pub fn reachable(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.num_states()];
        let mut queue: std::collections::VecDeque<StateId> = self.initial_states().into();
        for &s in &queue {
            seen[s] = true;
        }
        while let Some(s) = queue.pop_front() {
            for &t in &self.successors[s] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        (0..self.num_states()).filter(|&s| seen[s]).collect()
    }

    pub fn to_dot(&self) -> String {
        export::to_dot(self)
    }

    pub fn to_json(&self) -> TsJson {
        TsJson::from_system(self)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("transition system serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self, TsError> {
        let raw: TsJson = serde_json::from_str(text).map_err(|e| TsError::Json(e.to_string()))?;
        raw.into_system()
    }
}
