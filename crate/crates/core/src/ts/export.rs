use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{TransitionSystem, TsError};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub(super) fn to_dot(ts: &TransitionSystem) -> String {
    let mut out = String::from("digraph ts {\n  node [shape=box];\n");
    let initial = ts.initial();
    for s in 0..ts.num_states() {
        let style = match initial {
            Some(init) if init.binary_search(&s).is_ok() => ", style=bold",
            _ => "",
        };
        let _ = writeln!(
            out,
            "  n{s} [label=\"{}\\n{}\"{style}];",
            escape(ts.name(s)),
            escape(ts.output(s))
        );
    }
    for (s, t) in ts.edges() {
        let _ = writeln!(out, "  n{s} -> n{t};");
    }
    out.push_str("}\n");
    out
}

/// Serialized form: states and outputs by name, transitions as name pairs.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct TsJson {
    pub states: Vec<String>,
    pub transitions: Vec<(String, String)>,
    pub outputs: Vec<String>,
    pub output_map: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<String>>,
}

impl TsJson {
    pub fn from_system(ts: &TransitionSystem) -> Self {
        Self {
            states: ts.names().to_vec(),
            transitions: ts
                .edges()
                .map(|(s, t)| (ts.name(s).to_string(), ts.name(t).to_string()))
                .collect(),
            outputs: ts.outputs().to_vec(),
            output_map: (0..ts.num_states())
                .map(|s| (ts.name(s).to_string(), ts.output(s).to_string()))
                .collect(),
            initial: ts
                .initial()
                .map(|init| init.iter().map(|&s| ts.name(s).to_string()).collect()),
        }
    }

    pub fn into_system(self) -> Result<TransitionSystem, TsError> {
        let index: BTreeMap<&str, usize> =
            self.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let lookup = |name: &str| index.get(name).copied().ok_or_else(|| TsError::UnknownState(name.to_string()));
        let out_index: BTreeMap<&str, usize> =
            self.outputs.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut output_map = Vec::with_capacity(self.states.len());
        for state in &self.states {
            let label = self
                .output_map
                .get(state)
                .ok_or(TsError::OutputMapLength { expected: self.states.len(), got: self.output_map.len() })?;
            output_map.push(
                *out_index.get(label.as_str()).ok_or_else(|| TsError::UnknownOutput(label.clone()))?,
            );
        }
        if let Some(extra) = self.output_map.keys().find(|k| !index.contains_key(k.as_str())) {
            return Err(TsError::UnknownState(extra.clone()));
        }
        let edges = self
            .transitions
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>, TsError>>()?;
        let initial = match &self.initial {
            Some(init) => Some(init.iter().map(|n| lookup(n)).collect::<Result<Vec<_>, _>>()?),
            None => None,
        };
        TransitionSystem::new(self.states.clone(), self.outputs.clone(), output_map, edges)?
            .with_initial(initial)
    }
}
