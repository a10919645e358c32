//! Guard maps from label rules.

use super::{AbstractPlant, HdsError};
use crate::ts::StateId;

/// Axis-aligned box `[lower, upper)` covered by an abstract state.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub center: Vec<f64>,
}

/// Assigns `label` to every abstract state inside a box, or to a list of
/// abstract states.
#[derive(Debug, Clone, PartialEq)]
pub enum GuardRule {
    Box { label: usize, lower: Vec<f64>, upper: Vec<f64> },
    States { label: usize, states: Vec<StateId> },
}

impl GuardRule {
    pub fn label(&self) -> usize {
        match self {
            GuardRule::Box { label, .. } | GuardRule::States { label, .. } => *label,
        }
    }
}

enum Cover {
    Inside,
    Outside,
    Cut,
}

fn cover(region: &Region, lower: &[f64], upper: &[f64]) -> Cover {
    let disjoint = (0..lower.len()).any(|j| region.upper[j] <= lower[j] || region.lower[j] >= upper[j]);
    if disjoint {
        return Cover::Outside;
    }
    let inside = (0..lower.len()).all(|j| lower[j] <= region.lower[j] && region.upper[j] <= upper[j]);
    if inside { Cover::Inside } else { Cover::Cut }
}

/// Guard label of every abstract state of `plant`. A state must be either
/// inside or disjoint from every box, and may be claimed by at most one
/// label; unclaimed states get `default`.
pub fn label_states(
    mode: &str,
    plant: &AbstractPlant,
    labels: &[String],
    rules: &[GuardRule],
    default: Option<usize>,
) -> Result<Vec<usize>, HdsError> {
    let n = plant.num_states();
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let claim = |y: StateId, label: usize, assigned: &mut Vec<Option<usize>>| -> Result<(), HdsError> {
        match assigned[y] {
            Some(prev) if prev != label => Err(HdsError::OverlappingGuards {
                mode: mode.to_string(),
                state: plant.ts.name(y).to_string(),
                first: labels[prev].clone(),
                second: labels[label].clone(),
            }),
            _ => {
                assigned[y] = Some(label);
                Ok(())
            }
        }
    };
    for rule in rules {
        if rule.label() >= labels.len() {
            return Err(HdsError::UnknownLabel(rule.label()));
        }
        match rule {
            GuardRule::States { label, states } => {
                for &y in states {
                    if y >= n {
                        return Err(HdsError::UnknownState { plant: plant.name.clone(), state: y });
                    }
                    claim(y, *label, &mut assigned)?;
                }
            }
            GuardRule::Box { label, lower, upper } => {
                let regions =
                    plant.regions.as_ref().ok_or_else(|| HdsError::NoGeometry { plant: plant.name.clone() })?;
                let dim = regions.first().map_or(0, |r| r.lower.len());
                if lower.len() != dim || upper.len() != dim {
                    return Err(HdsError::BoxDimension {
                        plant: plant.name.clone(),
                        expected: dim,
                        got: lower.len().max(upper.len()),
                    });
                }
                for (y, region) in regions.iter().enumerate() {
                    match cover(region, lower, upper) {
                        Cover::Inside => claim(y, *label, &mut assigned)?,
                        Cover::Outside => {}
                        Cover::Cut => {
                            return Err(HdsError::IncompatibleGuard {
                                mode: mode.to_string(),
                                label: labels[*label].clone(),
                                state: plant.ts.name(y).to_string(),
                            })
                        }
                    }
                }
            }
        }
    }
    assigned
        .into_iter()
        .enumerate()
        .map(|(y, a)| {
            a.or(default).ok_or_else(|| HdsError::UncoveredState {
                mode: mode.to_string(),
                state: plant.ts.name(y).to_string(),
            })
        })
        .collect()
}
