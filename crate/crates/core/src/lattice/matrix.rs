use serde::{Deserialize, Serialize};

use super::LatticeError;

/// Below this state dimension matrices are stored densely.
pub const DENSE_BELOW: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Triplet {
    pub i: usize,
    pub j: usize,
    pub v: f64,
}

/// Row-major matrix storage; sparse rows are contiguous slices sorted by
/// column so a single row can be scanned in `O(nnz)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RowMatrix {
    Dense { rows: usize, cols: usize, data: Vec<f64> },
    Sparse { rows: usize, cols: usize, row_ptr: Vec<usize>, col: Vec<usize>, val: Vec<f64> },
}

impl RowMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RowMatrix::Sparse { rows, cols, row_ptr: vec![0; rows + 1], col: Vec::new(), val: Vec::new() }
    }

    pub fn from_rows(name: &'static str, rows: &[Vec<f64>], cols: usize) -> Result<Self, LatticeError> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(LatticeError::Shape {
                    name,
                    rows: rows.len(),
                    cols: row.len(),
                    expected_rows: rows.len(),
                    expected_cols: cols,
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(LatticeError::NonFinite { name, row: r, col: c });
                }
            }
            data.extend_from_slice(row);
        }
        Ok(RowMatrix::Dense { rows: rows.len(), cols, data })
    }

    /// Builds from `(i, j, v)` triplets; duplicates are summed, explicit zeros
    /// dropped.
    pub fn from_triplets(
        name: &'static str,
        rows: usize,
        cols: usize,
        triplets: &[Triplet],
        dense: bool,
    ) -> Result<Self, LatticeError> {
        let mut sorted = triplets.to_vec();
        for t in &sorted {
            if t.i >= rows || t.j >= cols {
                return Err(LatticeError::TripletOutOfRange { row: t.i, col: t.j, rows, cols });
            }
            if !t.v.is_finite() {
                return Err(LatticeError::NonFinite { name, row: t.i, col: t.j });
            }
        }
        if dense {
            let mut data = vec![0.0; rows * cols];
            for t in &sorted {
                data[t.i * cols + t.j] += t.v;
            }
            return Ok(RowMatrix::Dense { rows, cols, data });
        }
        sorted.sort_by_key(|t| (t.i, t.j));
        let mut row_ptr = vec![0; rows + 1];
        let mut col = Vec::with_capacity(sorted.len());
        let mut val: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for t in &sorted {
            if last == Some((t.i, t.j)) {
                *val.last_mut().expect("previous entry") += t.v;
                continue;
            }
            last = Some((t.i, t.j));
            row_ptr[t.i + 1] += 1;
            col.push(t.j);
            val.push(t.v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = RowMatrix::Sparse { rows, cols, row_ptr, col, val };
        m.drop_zeros();
        Ok(m)
    }

    fn drop_zeros(&mut self) {
        if let RowMatrix::Sparse { rows, row_ptr, col, val, .. } = self {
            let mut new_ptr = vec![0; *rows + 1];
            let mut new_col = Vec::with_capacity(col.len());
            let mut new_val = Vec::with_capacity(val.len());
            for r in 0..*rows {
                for idx in row_ptr[r]..row_ptr[r + 1] {
                    if val[idx] != 0.0 {
                        new_col.push(col[idx]);
                        new_val.push(val[idx]);
                    }
                }
                new_ptr[r + 1] = new_col.len();
            }
            *row_ptr = new_ptr;
            *col = new_col;
            *val = new_val;
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            RowMatrix::Dense { rows, .. } | RowMatrix::Sparse { rows, .. } => *rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            RowMatrix::Dense { cols, .. } | RowMatrix::Sparse { cols, .. } => *cols,
        }
    }

    /// Nonzero entries `(column, value)` of row `r`, in column order.
    pub fn row(&self, r: usize) -> RowIter<'_> {
        match self {
            RowMatrix::Dense { cols, data, .. } => RowIter::Dense { row: &data[r * cols..(r + 1) * cols], next: 0 },
            RowMatrix::Sparse { row_ptr, col, val, .. } => {
                let span = row_ptr[r]..row_ptr[r + 1];
                RowIter::Sparse { col: &col[span.clone()], val: &val[span], next: 0 }
            }
        }
    }

    pub fn row_has_nonzero(&self, r: usize) -> bool {
        self.row(r).next().is_some()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    /// `y = M x` for a dense vector.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows()).map(|r| self.row(r).map(|(j, v)| v * x[j]).sum()).collect()
    }
}

pub enum RowIter<'a> {
    Dense { row: &'a [f64], next: usize },
    Sparse { col: &'a [usize], val: &'a [f64], next: usize },
}

impl Iterator for RowIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            RowIter::Dense { row, next } => {
                while *next < row.len() {
                    let j = *next;
                    *next += 1;
                    if row[j] != 0.0 {
                        return Some((j, row[j]));
                    }
                }
                None
            }
            RowIter::Sparse { col, val, next } => {
                let j = *next;
                if j < col.len() {
                    *next += 1;
                    Some((col[j], val[j]))
                } else {
                    None
                }
            }
        }
    }
}

/// `dx/dt = A x + B u` with `x` in `R^n` and `u` in `R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: RowMatrix,
    b: RowMatrix,
}

impl LinearSystem {
    pub fn new(a: RowMatrix, b: RowMatrix) -> Result<Self, LatticeError> {
        let n = a.rows();
        if a.cols() != n {
            return Err(LatticeError::Shape { name: "A", rows: a.rows(), cols: a.cols(), expected_rows: n, expected_cols: n });
        }
        if b.rows() != n {
            return Err(LatticeError::Shape {
                name: "B",
                rows: b.rows(),
                cols: b.cols(),
                expected_rows: n,
                expected_cols: b.cols(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn from_dense(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self, LatticeError> {
        let n = a.len();
        let m = b.first().map_or(0, Vec::len);
        let a = RowMatrix::from_rows("A", a, n)?;
        let b = RowMatrix::from_rows("B", b, m)?;
        Self::new(a, b)
    }

    /// Sparse constructor; falls back to dense storage for small `n`.
    pub fn from_triplets(n: usize, m: usize, a: &[Triplet], b: &[Triplet]) -> Result<Self, LatticeError> {
        let dense = n < DENSE_BELOW;
        Self::new(
            RowMatrix::from_triplets("A", n, n, a, dense)?,
            RowMatrix::from_triplets("B", n, m, b, dense)?,
        )
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    pub fn a(&self) -> &RowMatrix {
        &self.a
    }

    pub fn b(&self) -> &RowMatrix {
        &self.b
    }

    /// Drift `A x + B u`.
    pub fn vector_field(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut dx = self.a.mul_vec(x);
        for (d, bu) in dx.iter_mut().zip(self.b.mul_vec(u)) {
            *d += bu;
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let t = [
            Triplet { i: 1, j: 2, v: 1.0 },
            Triplet { i: 0, j: 1, v: 2.0 },
            Triplet { i: 1, j: 2, v: 0.5 },
            Triplet { i: 0, j: 0, v: 0.0 },
        ];
        let m = RowMatrix::from_triplets("A", 3, 3, &t, false).unwrap();
        assert_eq!(m.row(0).collect::<Vec<_>>(), vec![(1, 2.0)]);
        assert_eq!(m.row(1).collect::<Vec<_>>(), vec![(2, 1.5)]);
        assert!(!m.row_has_nonzero(2));
        let d = RowMatrix::from_triplets("A", 3, 3, &t, true).unwrap();
        assert_eq!(d.row(1).collect::<Vec<_>>(), vec![(2, 1.5)]);
        assert_eq!(d.get(0, 1), 2.0);
    }

    #[test]
    fn shape_and_finiteness_checks() {
        assert!(LinearSystem::from_dense(&[vec![0.0, 1.0]], &[vec![1.0]]).is_err());
        assert!(matches!(
            RowMatrix::from_rows("A", &[vec![f64::NAN]], 1),
            Err(LatticeError::NonFinite { .. })
        ));
        assert!(matches!(
            RowMatrix::from_triplets("A", 2, 2, &[Triplet { i: 2, j: 0, v: 1.0 }], false),
            Err(LatticeError::TripletOutOfRange { .. })
        ));
    }

    #[test]
    fn vector_field_matches_dense_product() {
        let sys = LinearSystem::from_dense(&[vec![0.0, 1.0], vec![0.0, 0.0]], &[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(sys.vector_field(&[3.0, 2.0], &[5.0]), vec![2.0, 5.0]);
    }
}
