//! The JSON model file.
//!
//! ```json
//! {
//!   "schema": "vulnscope/1",
//!   "plants": { "NAME": { "kind": "linear" | "bnf" | "window" | "ode", ... } },
//!   "hybrid": { "labels": [...], "modes": [...], "transitions": [...], "initial": [...] },
//!   "specs": { "NAME": "LTL formula" },
//!   "analysis": { "bound": 8 }
//! }
//! ```
//!
//! Without a `hybrid` section the file must hold exactly one non-ODE plant,
//! which is run as the single mode `q0` with the single label `default`.
//! Unknown fields are rejected everywhere.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flat::{BnfChain, FlatAlphabetSpec, OdeModel};
use crate::hds::{label_states, AbstractPlant, GuardRule, HdsError, HybridModel, Region, Rehoming};
use crate::lattice::{BuildOptions, FaceTest, LatticePartition, LinearSystem, Triplet};
use crate::ltl::{parse_ltl, Alphabet, Ltl, LtlError};
use crate::ts::StateId;

pub const SCHEMA: &str = "vulnscope/1";
pub const CELL_BUDGET_ENV: &str = "VULNSCOPE_CELL_BUDGET";
pub const WINDOW_BUDGET_ENV: &str = "VULNSCOPE_WINDOW_BUDGET";
pub const DEFAULT_WINDOW_BUDGET: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model JSON: {0}")]
    Json(String),
    #[error("unsupported schema `{0}`, expected `{SCHEMA}`")]
    Schema(String),
    #[error("{0}")]
    Invalid(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("plant `{plant}`: {source}")]
    Plant { plant: String, source: HdsError },
    #[error("hybrid model: {0}")]
    Hybrid(#[from] HdsError),
    #[error("spec `{spec}`: {source}")]
    Spec { spec: String, source: LtlError },
    #[error("environment variable {name}: cannot parse `{value}` as a budget")]
    Env { name: &'static str, value: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema: String,
    pub plants: BTreeMap<String, PlantSpec>,
    #[serde(default)]
    pub hybrid: Option<HybridSpec>,
    #[serde(default)]
    pub specs: BTreeMap<String, String>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PlantSpec {
    /// `dx/dt = A x + B u` on a uniform lattice.
    Linear {
        /// Dense `A` (n x n) and `B` (n x m), row-major.
        #[serde(default)]
        a: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        b: Option<Vec<Vec<f64>>>,
        /// Sparse alternative: dimensions and `(i, j, v)` entries.
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        m: Option<usize>,
        #[serde(default)]
        a_triplets: Option<Vec<Triplet>>,
        #[serde(default)]
        b_triplets: Option<Vec<Triplet>>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        epsilon: Epsilon,
        #[serde(default = "yes")]
        self_loops: bool,
        #[serde(default)]
        face_test: FaceTestSpec,
    },
    Bnf {
        n: usize,
        epsilon: f64,
        x1_range: (f64, f64),
        orthant_bound: f64,
    },
    Window {
        symbols: Vec<String>,
        memory: usize,
    },
    Ode(OdeModel),
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Epsilon {
    Uniform(f64),
    PerAxis(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceTestSpec {
    #[default]
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridSpec {
    pub labels: Vec<String>,
    pub modes: Vec<ModeSpec>,
    /// Entries of `h`; missing pairs stay in their mode.
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
    #[serde(default)]
    pub rehoming: Vec<RehomingSpec>,
    #[serde(default)]
    pub initial: Option<Vec<RegionSpec>>,
    #[serde(default = "yes")]
    pub urgent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub name: String,
    pub plant: String,
    #[serde(default)]
    pub guards: Vec<GuardSpec>,
    #[serde(default)]
    pub default_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardSpec {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
}

/// A set of abstract states: an axis-aligned box (`null` bounds are
/// unbounded) or explicit state names.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    Box { lower: Vec<Option<f64>>, upper: Vec<Option<f64>> },
    States { states: Vec<String> },
}

fn selector(
    what: &str,
    lower: &Option<Vec<Option<f64>>>,
    upper: &Option<Vec<Option<f64>>>,
    states: &Option<Vec<String>>,
) -> Result<Selector, ModelError> {
    match (lower, upper, states) {
        (Some(l), Some(u), None) => Ok(Selector::Box { lower: l.clone(), upper: u.clone() }),
        (None, None, Some(s)) => Ok(Selector::States { states: s.clone() }),
        _ => Err(ModelError::Invalid(format!("{what}: give either `lower` and `upper`, or `states`"))),
    }
}

impl GuardSpec {
    pub fn selector(&self) -> Result<Selector, ModelError> {
        selector(&format!("guard `{}`", self.label), &self.lower, &self.upper, &self.states)
    }
}

impl RegionSpec {
    pub fn selector(&self) -> Result<Selector, ModelError> {
        selector(&format!("initial region in `{}`", self.mode), &self.lower, &self.upper, &self.states)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub q: String,
    pub k: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RehomingSpec {
    pub from: String,
    pub to: String,
    pub map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default)]
    pub bound: Option<usize>,
    #[serde(default)]
    pub cell_budget: Option<u64>,
    #[serde(default)]
    pub window_budget: Option<u64>,
    #[serde(default)]
    pub conflict_limit: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Budgets after applying environment overrides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    pub cells: u64,
    pub windows: u64,
}

impl ModelFile {
    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let m: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        if m.schema != SCHEMA {
            return Err(ModelError::Schema(m.schema));
        }
        if m.plants.is_empty() {
            return Err(ModelError::Invalid("no plants declared".into()));
        }
        Ok(m)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    /// Budgets from the analysis section, overridden by
    /// `VULNSCOPE_CELL_BUDGET` / `VULNSCOPE_WINDOW_BUDGET` when set.
    pub fn budgets(&self) -> Result<Budgets, ModelError> {
        let env = |name: &'static str| -> Result<Option<u64>, ModelError> {
            match std::env::var(name) {
                Ok(v) => v.trim().parse().map(Some).map_err(|_| ModelError::Env { name, value: v }),
                Err(_) => Ok(None),
            }
        };
        Ok(Budgets {
            cells: env(CELL_BUDGET_ENV)?
                .or(self.analysis.cell_budget)
                .unwrap_or(BuildOptions::default().cell_budget),
            windows: env(WINDOW_BUDGET_ENV)?.or(self.analysis.window_budget).unwrap_or(DEFAULT_WINDOW_BUDGET),
        })
    }

    pub fn ode_plant(&self, name: &str) -> Result<&OdeModel, ModelError> {
        match self.plants.get(name) {
            Some(PlantSpec::Ode(m)) => Ok(m),
            Some(_) => Err(ModelError::Invalid(format!("plant `{name}` is not an ODE model"))),
            None => Err(ModelError::Unknown { kind: "plant", name: name.to_string() }),
        }
    }

    pub fn spec(&self, name: &str) -> Result<&str, ModelError> {
        self.specs.get(name).map(String::as_str).ok_or_else(|| ModelError::Unknown { kind: "spec", name: name.into() })
    }
}

pub fn build_plant(name: &str, spec: &PlantSpec, budgets: Budgets) -> Result<AbstractPlant, ModelError> {
    let wrap = |source: HdsError| ModelError::Plant { plant: name.to_string(), source };
    match spec {
        PlantSpec::Linear { a, b, n, m, a_triplets, b_triplets, lower, upper, epsilon, self_loops, face_test } => {
            let sys = match (a, b, n, m, a_triplets, b_triplets) {
                (Some(a), Some(b), None, None, None, None) => LinearSystem::from_dense(a, b),
                (None, None, Some(n), Some(m), Some(at), Some(bt)) => LinearSystem::from_triplets(*n, *m, at, bt),
                _ => {
                    return Err(ModelError::Invalid(format!(
                        "plant `{name}`: give either dense `a` and `b`, or `n`, `m`, `a_triplets` and `b_triplets`"
                    )))
                }
            }
            .map_err(|e| wrap(e.into()))?;
            let part = match epsilon {
                Epsilon::Uniform(e) => LatticePartition::uniform(lower.clone(), upper.clone(), *e),
                Epsilon::PerAxis(e) => LatticePartition::new(lower.clone(), upper.clone(), e.clone()),
            }
            .map_err(|e| wrap(e.into()))?;
            let opts = BuildOptions {
                self_loops: *self_loops,
                cell_budget: budgets.cells,
                face_test: match face_test {
                    FaceTestSpec::Fast => FaceTest::Fast,
                    FaceTestSpec::Full => FaceTest::Full,
                },
            };
            AbstractPlant::lattice(name, &sys, &part, &opts).map_err(wrap)
        }
        PlantSpec::Bnf { n, epsilon, x1_range, orthant_bound } => {
            let chain = BnfChain::new(*n, *epsilon, *x1_range, *orthant_bound).map_err(|e| wrap(e.into()))?;
            Ok(AbstractPlant::bnf(name, &chain))
        }
        PlantSpec::Window { symbols, memory } => {
            let spec = FlatAlphabetSpec::new(symbols.clone(), *memory).map_err(|e| wrap(e.into()))?;
            AbstractPlant::window(name, &spec, budgets.windows).map_err(wrap)
        }
        PlantSpec::Ode(_) => Err(ModelError::Invalid(format!(
            "plant `{name}` is an ODE model; it can be simulated or recovered but not abstracted"
        ))),
    }
}

/// A model ready for analysis.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    pub hybrid: HybridModel,
}

impl CompiledModel {
    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.hybrid.modes.clone(), self.hybrid.labels.clone())
    }

    pub fn parse_spec(&self, name: &str, text: &str) -> Result<Ltl, ModelError> {
        parse_ltl(text, &self.alphabet()).map_err(|source| ModelError::Spec { spec: name.to_string(), source })
    }

    pub fn region(&self, q: usize, y: StateId) -> Option<&Region> {
        self.hybrid.plant_of(q).regions.as_ref().map(|r| &r[y])
    }
}

fn to_rule(plant: &AbstractPlant, label: usize, sel: &Selector) -> Result<GuardRule, ModelError> {
    match sel {
        Selector::Box { lower, upper } => Ok(GuardRule::Box {
            label,
            lower: lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect(),
            upper: upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
        }),
        Selector::States { states } => {
            let ids = states
                .iter()
                .map(|s| {
                    plant
                        .ts
                        .state_by_name(s)
                        .ok_or_else(|| ModelError::Unknown { kind: "abstract state", name: format!("{}/{s}", plant.name) })
                })
                .collect::<Result<_, _>>()?;
            Ok(GuardRule::States { label, states: ids })
        }
    }
}

fn index_of(kind: &'static str, names: &[String], name: &str) -> Result<usize, ModelError> {
    names.iter().position(|n| n == name).ok_or_else(|| ModelError::Unknown { kind, name: name.to_string() })
}

pub fn compile(model: &ModelFile) -> Result<CompiledModel, ModelError> {
    let budgets = model.budgets()?;
    let standalone;
    let hybrid = match &model.hybrid {
        Some(h) => h,
        None => {
            let candidates: Vec<&String> =
                model.plants.iter().filter(|(_, p)| !matches!(p, PlantSpec::Ode(_))).map(|(n, _)| n).collect();
            if candidates.len() != 1 {
                return Err(ModelError::Invalid(format!(
                    "without a hybrid section the model needs exactly one non-ODE plant, found {}",
                    candidates.len()
                )));
            }
            standalone = HybridSpec {
                labels: vec!["default".into()],
                modes: vec![ModeSpec {
                    name: "q0".into(),
                    plant: candidates[0].clone(),
                    guards: vec![],
                    default_label: Some("default".into()),
                }],
                transitions: vec![],
                rehoming: vec![],
                initial: None,
                urgent: true,
            };
            &standalone
        }
    };

    let mut plant_names: Vec<String> = Vec::new();
    let mut plants = Vec::new();
    let mut mode_plant = Vec::new();
    for m in &hybrid.modes {
        let idx = match plant_names.iter().position(|p| p == &m.plant) {
            Some(i) => i,
            None => {
                let spec = model
                    .plants
                    .get(&m.plant)
                    .ok_or_else(|| ModelError::Unknown { kind: "plant", name: m.plant.clone() })?;
                plants.push(build_plant(&m.plant, spec, budgets)?);
                plant_names.push(m.plant.clone());
                plants.len() - 1
            }
        };
        mode_plant.push(idx);
    }

    let modes: Vec<String> = hybrid.modes.iter().map(|m| m.name.clone()).collect();
    let labels = hybrid.labels.clone();
    let mut guard_map = Vec::new();
    for (q, m) in hybrid.modes.iter().enumerate() {
        let plant = &plants[mode_plant[q]];
        let rules = m
            .guards
            .iter()
            .map(|g| to_rule(plant, index_of("guard label", &labels, &g.label)?, &g.selector()?))
            .collect::<Result<Vec<_>, _>>()?;
        let default = m.default_label.as_deref().map(|d| index_of("guard label", &labels, d)).transpose()?;
        guard_map.push(label_states(&m.name, plant, &labels, &rules, default)?);
    }

    let mut hm = HybridModel::new(modes.clone(), labels.clone(), plants, mode_plant, guard_map);
    hm.urgent = hybrid.urgent;
    for t in &hybrid.transitions {
        let q = index_of("mode", &modes, &t.q)?;
        let k = index_of("guard label", &labels, &t.k)?;
        let to = index_of("mode", &modes, &t.to)?;
        hm.set_transition(q, k, to)?;
    }
    for r in &hybrid.rehoming {
        let from = index_of("mode", &modes, &r.from)?;
        let to = index_of("mode", &modes, &r.to)?;
        let (src, dst) = (&hm.plant_of(from).ts, &hm.plant_of(to).ts);
        let mut map = Vec::with_capacity(src.num_states());
        for y in 0..src.num_states() {
            let target = r.map.get(src.name(y)).ok_or_else(|| {
                ModelError::Invalid(format!("re-homing `{}` -> `{}` does not map `{}`", r.from, r.to, src.name(y)))
            })?;
            map.push(
                dst.state_by_name(target)
                    .ok_or_else(|| ModelError::Unknown { kind: "abstract state", name: target.clone() })?,
            );
        }
        hm.rehoming.push(Rehoming { from, to, map });
    }
    if let Some(init) = &hybrid.initial {
        let mut pairs = Vec::new();
        for r in init {
            let q = index_of("mode", &modes, &r.mode)?;
            let plant = hm.plant_of(q);
            let rule = to_rule(plant, 0, &r.selector()?)?;
            let marks = label_states(&r.mode, plant, &["in".into(), "out".into()], &[rule], Some(1))?;
            pairs.extend(marks.iter().enumerate().filter(|(_, &m)| m == 0).map(|(y, _)| (q, y)));
        }
        pairs.sort_unstable();
        pairs.dedup();
        if pairs.is_empty() {
            return Err(ModelError::Invalid("initial region selects no abstract state".into()));
        }
        hm.initial = Some(pairs);
    }
    hm.validate()?;
    Ok(CompiledModel { hybrid: hm })
}
