use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Minimum-cost perfect assignment for a square cost matrix.
///
/// Returns `assign` with row `r` matched to column `assign[r]`. Shortest
/// augmenting paths with dual potentials, O(k³). Rows are inserted in index
/// order and columns scanned in index order with strict comparisons, so ties
/// resolve the same way on every run.
pub fn linear_assignment(cost: &Matrix) -> Result<Vec<usize>> {
    let (k, cols) = cost.shape();
    if k != cols {
        return Err(Error::ShapeMismatch {
            op: "linear_assignment",
            left: cost.shape(),
            right: (k, k),
        });
    }
    if !cost.is_finite() {
        return Err(Error::NonFinite("assignment cost".into()));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    // 1-based arrays with a virtual column 0, after the classic formulation.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut row_of = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for row in 1..=k {
        row_of[0] = row;
        let mut col0 = 0;
        let mut min_to = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[col0] = true;
            let r = row_of[col0];
            let mut delta = f64::INFINITY;
            let mut next = 0;
            for c in 1..=k {
                if used[c] {
                    continue;
                }
                let reduced = cost[(r - 1, c - 1)] - u[r] - v[c];
                if reduced < min_to[c] {
                    min_to[c] = reduced;
                    way[c] = col0;
                }
                if min_to[c] < delta {
                    delta = min_to[c];
                    next = c;
                }
            }
            for c in 0..=k {
                if used[c] {
                    u[row_of[c]] += delta;
                    v[c] -= delta;
                } else {
                    min_to[c] -= delta;
                }
            }
            col0 = next;
            if row_of[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            row_of[col0] = row_of[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; k];
    for c in 1..=k {
        assign[row_of[c] - 1] = c - 1;
    }
    Ok(assign)
}
