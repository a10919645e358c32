use rayon::prelude::*;

use super::feasibility::fast_test;
use super::{transition_feasible_full, Cell, Direction, Face, LatticeError, LatticePartition, LinearSystem};
use crate::ts::TransitionSystem;

/// Which face test decides an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceTest {
    Fast,
    /// Vertex enumeration; only for small `n`, used as a cross-check.
    Full,
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub self_loops: bool,
    pub cell_budget: u64,
    pub face_test: FaceTest,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { self_loops: true, cell_budget: 1_000_000, face_test: FaceTest::Fast }
    }
}

pub fn cell_label(cell: &Cell) -> String {
    let parts: Vec<String> = cell.index().iter().map(usize::to_string).collect();
    format!("c[{}]", parts.join(","))
}

fn check_dims(sys: &LinearSystem, part: &LatticePartition) -> Result<(), LatticeError> {
    if sys.n() != part.dim() {
        return Err(LatticeError::Dimension { expected: sys.n(), got: part.dim() });
    }
    Ok(())
}

/// The quotient `(Y, ->, Y, id)`: one state per cell with the cell itself as
/// output, an edge for every face crossing the test admits, and optionally a
/// self-loop on every cell. Faces on the box boundary produce no edges.
pub fn build_lattice_abstraction(
    sys: &LinearSystem,
    part: &LatticePartition,
    opts: &BuildOptions,
) -> Result<TransitionSystem, LatticeError> {
    check_dims(sys, part)?;
    let cells = part.cell_count();
    if cells > opts.cell_budget as u128 {
        return Err(LatticeError::BudgetExceeded { cells, budget: opts.cell_budget });
    }
    let cells = cells as usize;
    let counts = part.counts();
    let per_cell: Vec<Result<Vec<(usize, usize)>, LatticeError>> = (0..cells)
        .into_par_iter()
        .map(|id| {
            let cell = part.cell_from_id(id);
            let mut edges = Vec::new();
            if opts.self_loops {
                edges.push((id, id));
            }
            for (axis, &count) in counts.iter().enumerate() {
                if cell.index()[axis] + 1 >= count {
                    continue;
                }
                let face = Face { lower: cell.clone(), axis };
                let hi = part.linear_id(&face.cell_hi());
                let (up, down) = match opts.face_test {
                    FaceTest::Fast => (
                        fast_test(sys, part, cell.index(), axis, Direction::LowToHigh),
                        fast_test(sys, part, cell.index(), axis, Direction::HighToLow),
                    ),
                    FaceTest::Full => (
                        transition_feasible_full(sys, &face, part, Direction::LowToHigh)?,
                        transition_feasible_full(sys, &face, part, Direction::HighToLow)?,
                    ),
                };
                if up {
                    edges.push((id, hi));
                }
                if down {
                    edges.push((hi, id));
                }
            }
            Ok(edges)
        })
        .collect();
    let mut edges = Vec::new();
    for e in per_cell {
        edges.extend(e?);
    }
    let labels: Vec<String> = (0..cells).map(|id| cell_label(&part.cell_from_id(id))).collect();
    Ok(TransitionSystem::new(labels.clone(), labels, (0..cells).collect(), edges)
        .expect("lattice abstraction is well formed"))
}

/// Abstraction restricted to a base cell and its upper neighbour along every
/// axis: one face per axis, both directions tested with the fast test. This
/// is the slab used on systems far too large for the full grid.
pub fn build_star_abstraction(
    sys: &LinearSystem,
    part: &LatticePartition,
    base: &Cell,
    opts: &BuildOptions,
) -> Result<TransitionSystem, LatticeError> {
    check_dims(sys, part)?;
    if !part.contains_cell(base) {
        return Err(LatticeError::CellOutOfRange { index: base.index().to_vec() });
    }
    let axes: Vec<usize> = (0..part.dim()).filter(|&k| base.index()[k] + 1 < part.counts()[k]).collect();
    let verdicts: Vec<(bool, bool)> = axes
        .par_iter()
        .map(|&k| {
            (
                fast_test(sys, part, base.index(), k, Direction::LowToHigh),
                fast_test(sys, part, base.index(), k, Direction::HighToLow),
            )
        })
        .collect();
    let mut names = Vec::with_capacity(axes.len() + 1);
    names.push("base".to_string());
    names.extend(axes.iter().map(|k| format!("base+e{k}")));
    let mut edges = Vec::new();
    if opts.self_loops {
        edges.extend((0..names.len()).map(|s| (s, s)));
    }
    for (slot, &(up, down)) in verdicts.iter().enumerate() {
        if up {
            edges.push((0, slot + 1));
        }
        if down {
            edges.push((slot + 1, 0));
        }
    }
    let n = names.len();
    Ok(TransitionSystem::new(names.clone(), names, (0..n).collect(), edges).expect("star abstraction is well formed"))
}
