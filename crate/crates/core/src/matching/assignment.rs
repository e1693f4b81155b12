//! Maximum-weight bipartite assignment (Kuhn-Munkres with potentials).

/// Weight assignment of rows to columns maximizing the total weight. Every
/// row of the smaller side gets a partner; callers drop zero-weight pairs to
/// obtain a partial matching. Returns `(total, row -> column)`.
pub(super) fn max_weight_assignment(weights: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return (0.0, vec![None; rows]);
    }
    let transposed = rows > cols;
    let cost: Vec<Vec<f64>> = if transposed {
        (0..cols)
            .map(|c| (0..rows).map(|r| -weights[r][c]).collect())
            .collect()
    } else {
        weights
            .iter()
            .map(|row| row.iter().map(|w| -w).collect())
            .collect()
    };
    let row_to_col = min_cost_assignment(&cost);

    let mut assignment = vec![None; rows];
    for (i, &j) in row_to_col.iter().enumerate() {
        if transposed {
            assignment[j] = Some(i);
        } else {
            assignment[i] = Some(j);
        }
    }
    let total = assignment
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| weights[r][c]))
        .sum();
    (total, assignment)
}

/// Classic O(n²m) Hungarian method for `n <= m`; returns the column of each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    debug_assert!(n <= m);

    // 1-based; column 0 is a sentinel.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}
