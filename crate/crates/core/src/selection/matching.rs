use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Maximum-weight perfect matching on a square bipartite graph.
///
/// `weights[i][j]` is the weight of row `i` taking column `j`; only edges with
/// `feasible[i][j]` may be used. Returns `assignment[row] = column`. Among
/// weight-optimal matchings (edges within a relative `1e-9` of tight) the
/// lexicographically smallest assignment vector is returned.
///
/// Runs the shortest-augmenting-path Hungarian method on negated weights,
/// then walks rows in order, swapping each onto the smallest tight column
/// reachable through an alternating cycle.
pub fn max_weight_perfect_matching(weights: &[Vec<f64>], feasible: &[Vec<bool>]) -> Result<Vec<usize>> {
    let n = weights.len();
    if feasible.len() != n
        || weights.iter().any(|r| r.len() != n)
        || feasible.iter().any(|r| r.len() != n)
    {
        return Err(Error::InvalidArgument("matching input must be square".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut scale: f64 = 1.0;
    for i in 0..n {
        for j in 0..n {
            if feasible[i][j] {
                let w = weights[i][j];
                if !w.is_finite() {
                    return Err(Error::InvalidArgument("matching weights must be finite".into()));
                }
                scale = scale.max(w.abs());
            }
        }
    }
    let cost = |i: usize, j: usize| {
        if feasible[i][j] {
            -weights[i][j]
        } else {
            f64::INFINITY
        }
    };

    // 1-based potentials; column 0 is the virtual root.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if !delta.is_finite() {
                return Err(Error::InfeasibleMatching);
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let eps = 1e-9 * scale;
    let tight: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| feasible[i][j] && cost(i, j) - u[i + 1] - v[j + 1] <= eps)
                .collect()
        })
        .collect();

    let mut col_of = vec![0usize; n];
    let mut row_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of_col[j] - 1] = j - 1;
        row_of[j - 1] = row_of_col[j] - 1;
    }

    let mut visited = vec![false; n];
    for i in 0..n {
        for c in 0..col_of[i] {
            if !tight[i][c] || row_of[c] < i {
                continue;
            }
            visited.iter_mut().for_each(|x| *x = false);
            visited[c] = true;
            let target = col_of[i];
            let donor = row_of[c];
            if reroute(donor, target, i, &tight, &mut visited, &mut col_of, &mut row_of) {
                col_of[i] = c;
                row_of[c] = i;
                break;
            }
        }
    }
    Ok(col_of)
}

/// Finds an alternating path from `row` to the freed column `target` through
/// tight edges, never touching columns held by rows `<= pinned`.
fn reroute(
    row: usize,
    target: usize,
    pinned: usize,
    tight: &[Vec<bool>],
    visited: &mut [bool],
    col_of: &mut [usize],
    row_of: &mut [usize],
) -> bool {
    for j in 0..tight.len() {
        if !tight[row][j] || visited[j] {
            continue;
        }
        if j != target && row_of[j] <= pinned {
            continue;
        }
        visited[j] = true;
        if j == target || reroute(row_of[j], target, pinned, tight, visited, col_of, row_of) {
            col_of[row] = j;
            row_of[j] = row;
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all(n: usize) -> Vec<Vec<bool>> {
        vec![vec![true; n]; n]
    }

    #[test]
    fn two_by_two() {
        let w = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(max_weight_perfect_matching(&w, &all(2)).unwrap(), vec![0, 1]);
    }

    #[test]
    fn identity_mask_forces_identity() {
        let n = 5;
        let w: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i * 7 + j * 3) as f64).collect()).collect();
        let mask: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
        assert_eq!(max_weight_perfect_matching(&w, &mask).unwrap(), (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn ties_pick_lexicographically_smallest() {
        let w = vec![vec![1.0; 4]; 4];
        assert_eq!(max_weight_perfect_matching(&w, &all(4)).unwrap(), vec![0, 1, 2, 3]);
        // Reversed-diagonal preferences with an equal-weight alternative.
        let w = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(max_weight_perfect_matching(&w, &all(2)).unwrap(), vec![1, 0]);
        let w = vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]];
        assert_eq!(max_weight_perfect_matching(&w, &all(3)).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn infeasible_mask_is_reported() {
        let w = vec![vec![1.0; 3]; 3];
        let mut mask = all(3);
        mask[0] = vec![true, false, false];
        mask[1] = vec![true, false, false];
        assert_eq!(max_weight_perfect_matching(&w, &mask), Err(Error::InfeasibleMatching));
    }

    #[test]
    fn negative_weights() {
        let w = vec![vec![-5.0, -1.0], vec![-1.0, -5.0]];
        assert_eq!(max_weight_perfect_matching(&w, &all(2)).unwrap(), vec![1, 0]);
    }
}
