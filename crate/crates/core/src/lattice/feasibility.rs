use super::{Direction, Face, LatticeError, LatticePartition, LinearSystem};

/// Largest dimension for which the `2^(n-1)` face vertices are enumerated.
pub const MAX_ENUMERATION_DIM: usize = 30;

/// Corner points of the common face, ordered lexicographically by their
/// offset pattern over the non-normal axes (first such axis most
/// significant). The first vertex is the component-wise lowest one.
pub fn shared_face_vertices(face: &Face, part: &LatticePartition) -> Result<Vec<Vec<f64>>, LatticeError> {
    let n = part.dim();
    if n > MAX_ENUMERATION_DIM {
        return Err(LatticeError::TooManyVertices { n, max: MAX_ENUMERATION_DIM });
    }
    let v0 = lowest_vertex(part, face.cell_lo().index(), face.axis());
    let others: Vec<usize> = (0..n).filter(|&j| j != face.axis()).collect();
    let count = 1usize << others.len();
    let mut out = Vec::with_capacity(count);
    for pattern in 0..count {
        let mut v = v0.clone();
        for (t, &j) in others.iter().enumerate() {
            if (pattern >> (others.len() - 1 - t)) & 1 == 1 {
                v[j] += part.epsilon()[j];
            }
        }
        out.push(v);
    }
    Ok(out)
}

fn lowest_vertex(part: &LatticePartition, lower: &[usize], axis: usize) -> Vec<f64> {
    (0..part.dim())
        .map(|j| if j == axis { part.coord(j, lower[j] + 1) } else { part.coord(j, lower[j]) })
        .collect()
}

#[inline]
fn crosses(p: f64, dir: Direction) -> bool {
    match dir {
        Direction::LowToHigh => p > 0.0,
        Direction::HighToLow => p < 0.0,
    }
}

/// Vertex-enumeration test: feasible iff row `k` of `B` is nonzero or some
/// face vertex has drift `a_k^T v` strictly in the crossing direction.
pub fn transition_feasible_full(
    sys: &LinearSystem,
    face: &Face,
    part: &LatticePartition,
    dir: Direction,
) -> Result<bool, LatticeError> {
    let k = face.axis();
    if sys.b().row_has_nonzero(k) {
        return Ok(true);
    }
    let vertices = shared_face_vertices(face, part)?;
    Ok(vertices.iter().any(|v| {
        let p: f64 = sys.a().row(k).map(|(j, a)| a * v[j]).sum();
        crosses(p, dir)
    }))
}

/// Single-vertex test: the extremum of `a_k^T v` over the face is reached by
/// stepping from the lowest vertex `v0` one cell width along every axis whose
/// off-diagonal coefficient has the crossing sign, i.e.
/// `a_k^T v0 + sum_{j != k} max(a_kj, 0) * eps_j` for low-to-high (and the
/// negative part for high-to-low). Touches only the nonzeros of row `k`.
pub fn transition_feasible_fast(sys: &LinearSystem, face: &Face, part: &LatticePartition, dir: Direction) -> bool {
    fast_test(sys, part, face.cell_lo().index(), face.axis(), dir)
}

pub(crate) fn fast_test(sys: &LinearSystem, part: &LatticePartition, lower: &[usize], k: usize, dir: Direction) -> bool {
    if sys.b().row_has_nonzero(k) {
        return true;
    }
    let eps = part.epsilon();
    let p: f64 = sys
        .a()
        .row(k)
        .map(|(j, a)| {
            if j == k {
                return a * part.coord(k, lower[k] + 1);
            }
            let base = part.coord(j, lower[j]);
            let step = match dir {
                Direction::LowToHigh => a > 0.0,
                Direction::HighToLow => a < 0.0,
            };
            a * if step { base + eps[j] } else { base }
        })
        .sum();
    crosses(p, dir)
}
