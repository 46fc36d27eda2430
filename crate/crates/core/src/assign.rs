//! Minimum-cost partial assignment between two small sets.
//!
//! Every row is either matched to a distinct column or left alone at its own
//! cost, and likewise for columns. Instances with at most
//! [`EXHAUSTIVE_LIMIT`] rows and columns are solved by enumerating all
//! partial injections; larger ones by the Hungarian method on the usual
//! `(m + n) x (m + n)` augmented matrix.

pub const EXHAUSTIVE_LIMIT: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub cost: f64,
    /// Matched `(row, column)` pairs in increasing row order.
    pub pairs: Vec<(usize, usize)>,
}

/// Solves the partial assignment problem. `pair_cost[i][j]` is the cost of
/// matching row `i` with column `j`; `row_alone[i]` and `col_alone[j]` are
/// the costs of leaving them unmatched.
pub fn solve(pair_cost: &[Vec<f64>], row_alone: &[f64], col_alone: &[f64]) -> Assignment {
    let (m, n) = (row_alone.len(), col_alone.len());
    if m == 0 || n == 0 {
        return Assignment { cost: row_alone.iter().sum::<f64>() + col_alone.iter().sum::<f64>(), pairs: Vec::new() };
    }
    if m <= EXHAUSTIVE_LIMIT && n <= EXHAUSTIVE_LIMIT {
        exhaustive(pair_cost, row_alone, col_alone)
    } else {
        hungarian_partial(pair_cost, row_alone, col_alone)
    }
}

/// Enumerates every partial injection. Rows try columns in increasing
/// order before staying alone, and only strictly better totals replace the
/// incumbent, so ties resolve towards matching early rows to early columns.
pub fn exhaustive(pair_cost: &[Vec<f64>], row_alone: &[f64], col_alone: &[f64]) -> Assignment {
    let n = col_alone.len();
    let mut best = Assignment { cost: f64::INFINITY, pairs: Vec::new() };
    let mut used = vec![false; n];
    let mut current = Vec::new();
    fn rec(
        i: usize,
        acc: f64,
        pair_cost: &[Vec<f64>],
        row_alone: &[f64],
        col_alone: &[f64],
        used: &mut [bool],
        current: &mut Vec<(usize, usize)>,
        best: &mut Assignment,
    ) {
        if i == row_alone.len() {
            let acc = acc + (0..col_alone.len()).filter(|&j| !used[j]).map(|j| col_alone[j]).sum::<f64>();
            if acc < best.cost {
                best.cost = acc;
                best.pairs = current.clone();
            }
            return;
        }
        for j in 0..col_alone.len() {
            if !used[j] {
                used[j] = true;
                current.push((i, j));
                rec(i + 1, acc + pair_cost[i][j], pair_cost, row_alone, col_alone, used, current, best);
                current.pop();
                used[j] = false;
            }
        }
        rec(i + 1, acc + row_alone[i], pair_cost, row_alone, col_alone, used, current, best);
    }
    rec(0, 0.0, pair_cost, row_alone, col_alone, &mut used, &mut current, &mut best);
    // recompute in a fixed summation order so equal assignments give equal costs
    best.cost = assignment_cost(pair_cost, row_alone, col_alone, &best.pairs);
    best
}

/// Total cost of a given set of pairs.
pub fn assignment_cost(pair_cost: &[Vec<f64>], row_alone: &[f64], col_alone: &[f64], pairs: &[(usize, usize)]) -> f64 {
    let mut row_used = vec![false; row_alone.len()];
    let mut col_used = vec![false; col_alone.len()];
    let mut total = 0.0;
    for &(i, j) in pairs {
        row_used[i] = true;
        col_used[j] = true;
        total += pair_cost[i][j];
    }
    for (i, c) in row_alone.iter().enumerate() {
        if !row_used[i] {
            total += c;
        }
    }
    for (j, c) in col_alone.iter().enumerate() {
        if !col_used[j] {
            total += c;
        }
    }
    total
}

/// Partial assignment through the Hungarian method on the augmented matrix.
pub fn hungarian_partial(pair_cost: &[Vec<f64>], row_alone: &[f64], col_alone: &[f64]) -> Assignment {
    let (m, n) = (row_alone.len(), col_alone.len());
    let size = m + n;
    let finite_max = pair_cost.iter().flatten().chain(row_alone).chain(col_alone).fold(0.0f64, |a, &b| a.max(b.abs()));
    let forbidden = (finite_max + 1.0) * (size as f64 + 1.0) * 4.0;
    let mut cost = vec![vec![forbidden; size]; size];
    for i in 0..m {
        for j in 0..n {
            cost[i][j] = pair_cost[i][j];
        }
        cost[i][n + i] = row_alone[i];
    }
    for j in 0..n {
        cost[m + j][j] = col_alone[j];
        for i in 0..m {
            cost[m + j][n + i] = 0.0;
        }
    }
    let col_of_row = hungarian(&cost);
    let pairs: Vec<(usize, usize)> = (0..m).filter(|&i| col_of_row[i] < n).map(|i| (i, col_of_row[i])).collect();
    Assignment { cost: assignment_cost(pair_cost, row_alone, col_alone, &pairs), pairs }
}

/// Square Hungarian method (shortest augmenting paths with potentials).
/// Returns the column assigned to each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
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
            }
            for j in 0..=n {
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
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            col_of_row[p[j] - 1] = j - 1;
        }
    }
    col_of_row
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_sides() {
        let a = solve(&[], &[], &[1.0, 2.0]);
        assert_eq!(a.cost, 3.0);
        assert!(a.pairs.is_empty());
    }

    #[test]
    fn prefers_cheaper_of_match_or_alone() {
        let a = solve(&[vec![5.0]], &[1.0], &[1.0]);
        assert_eq!(a.cost, 2.0);
        assert!(a.pairs.is_empty());
        let b = solve(&[vec![1.5]], &[1.0], &[1.0]);
        assert_eq!(b.pairs, vec![(0, 0)]);
    }

    #[test]
    fn ties_prefer_matching() {
        let a = solve(&[vec![2.0]], &[1.0], &[1.0]);
        assert_eq!(a.pairs, vec![(0, 0)]);
    }

    #[test]
    fn hungarian_agrees_with_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let m = rng.gen_range(1..=6);
            let n = rng.gen_range(1..=6);
            let pc: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()).collect();
            let ra: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..6.0)).collect();
            let ca: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..6.0)).collect();
            let e = exhaustive(&pc, &ra, &ca);
            let h = hungarian_partial(&pc, &ra, &ca);
            assert!((e.cost - h.cost).abs() < 1e-9, "{} vs {}", e.cost, h.cost);
        }
    }
}
