//! Hypercubic-lattice abstraction of `dx/dt = Ax + Bu`.
//!
//! A [`LatticePartition`] tiles a box with equal cells per axis. Two cells
//! sharing a face are connected in the abstraction when the flow can cross
//! that face in the given direction: either the input acts on the face's
//! normal axis, or the drift `a_k^T v` has the right sign at some vertex of
//! the face. [`transition_feasible_full`] enumerates the `2^(n-1)` vertices;
//! [`transition_feasible_fast`] evaluates only the extremal vertex and runs in
//! time proportional to the nonzeros of row `k`.

mod build;
mod feasibility;
mod matrix;

pub use build::{build_lattice_abstraction, build_star_abstraction, cell_label, BuildOptions, FaceTest};
pub use feasibility::{
    shared_face_vertices, transition_feasible_fast, transition_feasible_full, MAX_ENUMERATION_DIM,
};
pub use matrix::{LinearSystem, RowMatrix, Triplet};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("matrix {name} is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    Shape { name: &'static str, rows: usize, cols: usize, expected_rows: usize, expected_cols: usize },
    #[error("matrix {name} has a non-finite entry at ({row}, {col})")]
    NonFinite { name: &'static str, row: usize, col: usize },
    #[error("triplet ({row}, {col}) lies outside a {rows}x{cols} matrix")]
    TripletOutOfRange { row: usize, col: usize, rows: usize, cols: usize },
    #[error("lattice bounds have dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("axis {axis}: need lower < upper and a positive cell width")]
    BadAxis { axis: usize },
    #[error("axis {axis}: width {width} does not tile [{lower}, {upper}) exactly")]
    NotTiled { axis: usize, lower: f64, upper: f64, width: f64 },
    #[error("cell index {index:?} is outside the lattice")]
    CellOutOfRange { index: Vec<usize> },
    #[error("face on axis {axis} has no upper neighbour inside the lattice")]
    FaceOutOfRange { axis: usize },
    #[error("vertex enumeration limited to n <= {max}, got n = {n}")]
    TooManyVertices { n: usize, max: usize },
    #[error("lattice has {cells} cells, above the budget of {budget}")]
    BudgetExceeded { cells: u128, budget: u64 },
}

/// Crossing direction across a face, relative to the face's axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// From the lower cell into the upper cell.
    LowToHigh,
    /// From the upper cell into the lower cell.
    HighToLow,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::LowToHigh, Direction::HighToLow];
}

/// A box `[lower, upper)` tiled by cells of side `epsilon[j]` along axis `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePartition {
    lower: Vec<f64>,
    upper: Vec<f64>,
    epsilon: Vec<f64>,
    counts: Vec<usize>,
}

impl LatticePartition {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, epsilon: Vec<f64>) -> Result<Self, LatticeError> {
        let n = lower.len();
        for len in [upper.len(), epsilon.len()] {
            if len != n {
                return Err(LatticeError::Dimension { expected: n, got: len });
            }
        }
        if n == 0 {
            return Err(LatticeError::Dimension { expected: 1, got: 0 });
        }
        let mut counts = Vec::with_capacity(n);
        for axis in 0..n {
            let (lo, hi, w) = (lower[axis], upper[axis], epsilon[axis]);
            if !(lo.is_finite() && hi.is_finite() && w.is_finite() && lo < hi && w > 0.0) {
                return Err(LatticeError::BadAxis { axis });
            }
            let ratio = (hi - lo) / w;
            let rounded = ratio.round();
            if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded.max(1.0) {
                return Err(LatticeError::NotTiled { axis, lower: lo, upper: hi, width: w });
            }
            counts.push(rounded as usize);
        }
        Ok(Self { lower, upper, epsilon, counts })
    }

    /// Uniform cell side on every axis.
    pub fn uniform(lower: Vec<f64>, upper: Vec<f64>, epsilon: f64) -> Result<Self, LatticeError> {
        let n = lower.len();
        Self::new(lower, upper, vec![epsilon; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    /// Cells per axis.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Total number of cells, saturating instead of overflowing.
    pub fn cell_count(&self) -> u128 {
        self.counts
            .iter()
            .try_fold(1u128, |acc, &c| acc.checked_mul(c as u128))
            .unwrap_or(u128::MAX)
    }

    pub fn contains_cell(&self, cell: &Cell) -> bool {
        cell.0.len() == self.dim() && cell.0.iter().zip(&self.counts).all(|(&i, &c)| i < c)
    }

    /// Row-major linear id, last axis fastest. Only meaningful when the cell
    /// count fits in `usize`.
    pub fn linear_id(&self, cell: &Cell) -> usize {
        cell.0.iter().zip(&self.counts).fold(0usize, |acc, (&i, &c)| acc * c + i)
    }

    pub fn cell_from_id(&self, mut id: usize) -> Cell {
        let mut index = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            index[axis] = id % self.counts[axis];
            id /= self.counts[axis];
        }
        Cell(index)
    }

    /// Lower corner of a cell.
    pub fn cell_lower(&self, cell: &Cell) -> Vec<f64> {
        (0..self.dim()).map(|j| self.coord(j, cell.0[j])).collect()
    }

    pub fn cell_center(&self, cell: &Cell) -> Vec<f64> {
        (0..self.dim()).map(|j| self.coord(j, cell.0[j]) + 0.5 * self.epsilon[j]).collect()
    }

    /// Cell containing `x`, if `x` lies in the box.
    pub fn locate(&self, x: &[f64]) -> Option<Cell> {
        if x.len() != self.dim() {
            return None;
        }
        let mut index = Vec::with_capacity(self.dim());
        for (j, &xj) in x.iter().enumerate() {
            if !(xj >= self.lower[j] && xj < self.upper[j]) {
                return None;
            }
            let i = ((xj - self.lower[j]) / self.epsilon[j]).floor() as usize;
            index.push(i.min(self.counts[j] - 1));
        }
        Some(Cell(index))
    }

    /// Grid coordinate `lower_j + i * epsilon_j`.
    #[inline]
    pub(crate) fn coord(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.epsilon[axis]
    }
}

/// Integer index of a lattice cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell(pub Vec<usize>);

impl Cell {
    pub fn index(&self) -> &[usize] {
        &self.0
    }
}

/// The common face of `lower` and its upper neighbour along `axis`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Face {
    lower: Cell,
    axis: usize,
}

impl Face {
    pub fn new(lower: Cell, axis: usize, part: &LatticePartition) -> Result<Self, LatticeError> {
        if !part.contains_cell(&lower) {
            return Err(LatticeError::CellOutOfRange { index: lower.0 });
        }
        if axis >= part.dim() || lower.0[axis] + 1 >= part.counts()[axis] {
            return Err(LatticeError::FaceOutOfRange { axis });
        }
        Ok(Self { lower, axis })
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn cell_lo(&self) -> &Cell {
        &self.lower
    }

    pub fn cell_hi(&self) -> Cell {
        let mut index = self.lower.0.clone();
        index[self.axis] += 1;
        Cell(index)
    }
}
