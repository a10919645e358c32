//! Hybrid models: a finite supervisor `h: Q x K -> Q` in feedback with one
//! abstracted continuous plant per mode.
//!
//! The composed system has one state per pair `(q, y)` of a mode and an
//! abstract state of that mode's plant, numbered mode-major, and the output of
//! `(q, y)` is the pair `(q, p_q(y))`.

mod guard;

pub use guard::{label_states, GuardRule, Region};

use thiserror::Error;

use crate::flat::{bnf_quotient, difference_flat_quotient, BnfChain, FlatAlphabetSpec, FlatError};
use crate::lattice::{build_lattice_abstraction, BuildOptions, LatticeError, LatticePartition, LinearSystem};
use crate::ts::{StateId, TransitionSystem, TsError};

#[derive(Debug, Error, PartialEq)]
pub enum HdsError {
    #[error("hybrid model declares no modes")]
    NoModes,
    #[error("hybrid model declares no guard labels")]
    NoLabels,
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: &'static str, name: String },
    #[error("unknown mode index {0}")]
    UnknownMode(usize),
    #[error("unknown guard label index {0}")]
    UnknownLabel(usize),
    #[error("plant `{plant}` has no abstract state {state}")]
    UnknownState { plant: String, state: usize },
    #[error("unknown plant index {0}")]
    UnknownPlant(usize),
    #[error("mode `{mode}`: guard map has {got} entries, plant has {expected} abstract states")]
    GuardMapLength { mode: String, expected: usize, got: usize },
    #[error("mode `{mode}`: guard region for `{label}` cuts through abstract state `{state}`")]
    IncompatibleGuard { mode: String, label: String, state: String },
    #[error("mode `{mode}`: abstract state `{state}` lies in regions of both `{first}` and `{second}`")]
    OverlappingGuards { mode: String, state: String, first: String, second: String },
    #[error("mode `{mode}`: abstract state `{state}` is covered by no guard region and there is no default label")]
    UncoveredState { mode: String, state: String },
    #[error("plant `{plant}` has no geometry, so box guards cannot be evaluated on it")]
    NoGeometry { plant: String },
    #[error("guard box has dimension {got}, plant `{plant}` has {expected}")]
    BoxDimension { plant: String, expected: usize, got: usize },
    #[error("modes `{from}` and `{to}` use different plants and no re-homing table maps one onto the other")]
    MissingRehoming { from: String, to: String },
    #[error("re-homing table `{from}` -> `{to}` has {got} entries, expected {expected}")]
    RehomingLength { from: String, to: String, expected: usize, got: usize },
    #[error("re-homing table `{from}` -> `{to}` targets state {state} outside the plant")]
    RehomingTarget { from: String, to: String, state: usize },
    #[error("initial state ({mode}, {state}) out of range")]
    InitialOutOfRange { mode: usize, state: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Flat(#[from] FlatError),
    #[error(transparent)]
    Ts(#[from] TsError),
}

/// A continuous plant after abstraction: its quotient system and, when the
/// plant lives in `R^n`, the box covered by every abstract state.
#[derive(Debug, Clone)]
pub struct AbstractPlant {
    pub name: String,
    pub ts: TransitionSystem,
    pub regions: Option<Vec<Region>>,
}

impl AbstractPlant {
    pub fn lattice(
        name: &str,
        sys: &LinearSystem,
        part: &LatticePartition,
        opts: &BuildOptions,
    ) -> Result<Self, HdsError> {
        let ts = build_lattice_abstraction(sys, part, opts)?;
        let regions = (0..ts.num_states())
            .map(|id| {
                let cell = part.cell_from_id(id);
                let lower = part.cell_lower(&cell);
                let upper = lower.iter().zip(part.epsilon()).map(|(l, e)| l + e).collect();
                Region { lower, upper, center: part.cell_center(&cell) }
            })
            .collect();
        Ok(Self { name: name.to_string(), ts, regions: Some(regions) })
    }

    pub fn bnf(name: &str, chain: &BnfChain) -> Self {
        let ts = bnf_quotient(chain);
        let regions = (0..ts.num_states())
            .map(|id| {
                let state = chain.state_from_id(id);
                let (lower, upper) = chain.state_box(&state);
                Region { lower, upper, center: chain.state_center(&state) }
            })
            .collect();
        Self { name: name.to_string(), ts, regions: Some(regions) }
    }

    pub fn window(name: &str, spec: &FlatAlphabetSpec, budget: u64) -> Result<Self, HdsError> {
        Ok(Self { name: name.to_string(), ts: difference_flat_quotient(spec, budget)?, regions: None })
    }

    pub fn from_ts(name: &str, ts: TransitionSystem) -> Self {
        Self { name: name.to_string(), ts, regions: None }
    }

    pub fn num_states(&self) -> usize {
        self.ts.num_states()
    }
}

/// Explicit map from the abstract states of one mode's plant to another's.
#[derive(Debug, Clone, PartialEq)]
pub struct Rehoming {
    pub from: usize,
    pub to: usize,
    pub map: Vec<StateId>,
}

#[derive(Debug, Clone)]
pub struct HybridModel {
    pub modes: Vec<String>,
    pub labels: Vec<String>,
    pub plants: Vec<AbstractPlant>,
    /// Plant index of every mode.
    pub mode_plant: Vec<usize>,
    /// `h[q][k]`.
    pub h: Vec<Vec<usize>>,
    /// `p_q`: guard label of every abstract state, per mode.
    pub guard_map: Vec<Vec<usize>>,
    pub rehoming: Vec<Rehoming>,
    /// Admissible start pairs `(q, y)`; `None` allows every pair.
    pub initial: Option<Vec<(usize, StateId)>>,
    /// When set, a state whose label triggers a switch has only the switch
    /// edge; otherwise it also keeps its continuous edges.
    pub urgent: bool,
}

/// A state `(q, y)` of the composed system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HybridAbstractState {
    pub q: usize,
    pub y: StateId,
}

impl HybridModel {
    /// A model whose supervisor never switches: `h(q, k) = q`.
    pub fn new(
        modes: Vec<String>,
        labels: Vec<String>,
        plants: Vec<AbstractPlant>,
        mode_plant: Vec<usize>,
        guard_map: Vec<Vec<usize>>,
    ) -> Self {
        let h = (0..modes.len()).map(|q| vec![q; labels.len()]).collect();
        Self { modes, labels, plants, mode_plant, h, guard_map, rehoming: Vec::new(), initial: None, urgent: true }
    }

    pub fn set_transition(&mut self, q: usize, k: usize, target: usize) -> Result<(), HdsError> {
        if q >= self.modes.len() {
            return Err(HdsError::UnknownMode(q));
        }
        if target >= self.modes.len() {
            return Err(HdsError::UnknownMode(target));
        }
        if k >= self.labels.len() {
            return Err(HdsError::UnknownLabel(k));
        }
        self.h[q][k] = target;
        Ok(())
    }

    pub fn mode_index(&self, name: &str) -> Option<usize> {
        self.modes.iter().position(|m| m == name)
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|k| k == name)
    }

    pub fn plant_of(&self, q: usize) -> &AbstractPlant {
        &self.plants[self.mode_plant[q]]
    }

    fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.modes.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for q in 0..self.modes.len() {
            acc += self.plant_of(q).num_states();
            offsets.push(acc);
        }
        offsets
    }

    /// Number of composed states, `sum_q |Y_q|`.
    pub fn product_size(&self) -> usize {
        self.offsets()[self.modes.len()]
    }

    pub fn product_id(&self, s: HybridAbstractState) -> StateId {
        self.offsets()[s.q] + s.y
    }

    pub fn product_state(&self, id: StateId) -> HybridAbstractState {
        let offsets = self.offsets();
        let q = offsets.partition_point(|&o| o <= id) - 1;
        HybridAbstractState { q, y: id - offsets[q] }
    }

    /// Output label `(q,k)` of the composed system.
    pub fn output_label(&self, q: usize, k: usize) -> String {
        format!("({},{})", self.modes[q], self.labels[k])
    }

    pub fn validate(&self) -> Result<(), HdsError> {
        if self.modes.is_empty() {
            return Err(HdsError::NoModes);
        }
        if self.labels.is_empty() {
            return Err(HdsError::NoLabels);
        }
        check_unique("mode", &self.modes)?;
        check_unique("guard label", &self.labels)?;
        let nq = self.modes.len();
        if self.mode_plant.len() != nq {
            return Err(HdsError::UnknownMode(self.mode_plant.len().min(nq)));
        }
        if let Some(&p) = self.mode_plant.iter().find(|&&p| p >= self.plants.len()) {
            return Err(HdsError::UnknownPlant(p));
        }
        if self.h.len() != nq {
            return Err(HdsError::UnknownMode(self.h.len()));
        }
        for row in &self.h {
            if row.len() != self.labels.len() {
                return Err(HdsError::UnknownLabel(row.len()));
            }
            if let Some(&bad) = row.iter().find(|&&t| t >= nq) {
                return Err(HdsError::UnknownMode(bad));
            }
        }
        if self.guard_map.len() != nq {
            return Err(HdsError::UnknownMode(self.guard_map.len()));
        }
        for (q, p) in self.guard_map.iter().enumerate() {
            let expected = self.plant_of(q).num_states();
            if p.len() != expected {
                return Err(HdsError::GuardMapLength { mode: self.modes[q].clone(), expected, got: p.len() });
            }
            if let Some(&bad) = p.iter().find(|&&k| k >= self.labels.len()) {
                return Err(HdsError::UnknownLabel(bad));
            }
        }
        for r in &self.rehoming {
            if r.from >= nq || r.to >= nq {
                return Err(HdsError::UnknownMode(r.from.max(r.to)));
            }
            let (from, to) = (self.modes[r.from].clone(), self.modes[r.to].clone());
            let expected = self.plant_of(r.from).num_states();
            if r.map.len() != expected {
                return Err(HdsError::RehomingLength { from, to, expected, got: r.map.len() });
            }
            let limit = self.plant_of(r.to).num_states();
            if let Some(&state) = r.map.iter().find(|&&s| s >= limit) {
                return Err(HdsError::RehomingTarget { from, to, state });
            }
        }
        for q in 0..nq {
            for &t in &self.h[q] {
                if t != q && self.mode_plant[q] != self.mode_plant[t] {
                    self.rehome(q, t, 0)?;
                }
            }
        }
        if let Some(init) = &self.initial {
            for &(q, y) in init {
                if q >= nq || y >= self.plant_of(q).num_states() {
                    return Err(HdsError::InitialOutOfRange { mode: q, state: y });
                }
            }
        }
        Ok(())
    }

    /// Where abstract state `y` of mode `from` lands after switching to `to`.
    fn rehome(&self, from: usize, to: usize, y: StateId) -> Result<StateId, HdsError> {
        if self.mode_plant[from] == self.mode_plant[to] {
            return Ok(y);
        }
        self.rehoming
            .iter()
            .find(|r| r.from == from && r.to == to)
            .map(|r| r.map[y])
            .ok_or_else(|| HdsError::MissingRehoming { from: self.modes[from].clone(), to: self.modes[to].clone() })
    }
}

fn check_unique(kind: &'static str, names: &[String]) -> Result<(), HdsError> {
    let mut seen = std::collections::HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(HdsError::Duplicate { kind, name: n.clone() });
        }
    }
    Ok(())
}

/// `(Q, ->d, Q, id)` with `q ->d q'` iff `q' = h(q, k)` for some `k`.
pub fn discrete_transition_system(model: &HybridModel) -> Result<TransitionSystem, HdsError> {
    model.validate()?;
    let n = model.modes.len();
    let edges = (0..n).flat_map(|q| model.h[q].iter().map(move |&t| (q, t)));
    Ok(TransitionSystem::new(model.modes.clone(), model.modes.clone(), (0..n).collect(), edges)?)
}

/// The product of the supervisor and the per-mode abstractions.
pub fn compose_abstraction(model: &HybridModel) -> Result<TransitionSystem, HdsError> {
    model.validate()?;
    let offsets = model.offsets();
    let nk = model.labels.len();
    let mut names = Vec::with_capacity(offsets[model.modes.len()]);
    let mut output_map = Vec::with_capacity(names.capacity());
    let mut edges = Vec::new();
    for (q, mode) in model.modes.iter().enumerate() {
        let plant = model.plant_of(q);
        for y in 0..plant.num_states() {
            names.push(format!("{mode}/{}", plant.ts.name(y)));
            let k = model.guard_map[q][y];
            output_map.push(q * nk + k);
            let id = offsets[q] + y;
            let target = model.h[q][k];
            let switching = target != q;
            if switching {
                edges.push((id, offsets[target] + model.rehome(q, target, y)?));
            }
            if !switching || !model.urgent {
                edges.extend(plant.ts.successors(y).iter().map(|&z| (id, offsets[q] + z)));
            }
        }
    }
    let outputs = (0..model.modes.len()).flat_map(|q| (0..nk).map(move |k| (q, k))).map(|(q, k)| model.output_label(q, k)).collect();
    let ts = TransitionSystem::new(names, outputs, output_map, edges)?;
    let initial = model.initial.as_ref().map(|init| init.iter().map(|&(q, y)| offsets[q] + y).collect());
    Ok(ts.with_initial(initial)?)
}
