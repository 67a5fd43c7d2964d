//! Dense linear sum assignment via shortest augmenting paths with dual
//! potentials (the Jonker-Volgenant scheme), O(n^3).

use super::GraphError;

/// A minimum-cost perfect assignment of rows to columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<usize>,
    pub total_cost: f64,
}

/// Solve the linear sum assignment problem for a square cost matrix given in
/// row-major order.
pub fn solve_lsap(n: usize, cost: &[f64]) -> Result<Assignment, GraphError> {
    if cost.len() != n * n {
        return Err(GraphError::InvalidCostMatrix(format!(
            "expected {} entries, got {}",
            n * n,
            cost.len()
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(GraphError::InvalidCostMatrix("non-finite entry".into()));
    }
    if n == 0 {
        return Ok(Assignment {
            row_to_col: Vec::new(),
            total_cost: 0.0,
        });
    }

    let at = |i: usize, j: usize| cost[i * n + j];
    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut row_to_col = vec![usize::MAX; n];
    let mut col_to_row = vec![usize::MAX; n];

    for cur_row in 0..n {
        // Dijkstra over columns with reduced costs
        let mut shortest = vec![f64::INFINITY; n];
        let mut path = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut visited_rows = Vec::with_capacity(n);
        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let mut sink = usize::MAX;
        while sink == usize::MAX {
            visited_rows.push(i);
            let mut lowest = f64::INFINITY;
            let mut index = usize::MAX;
            for j in 0..n {
                if done[j] {
                    continue;
                }
                let reduced = min_val + at(i, j) - u[i] - v[j];
                if reduced < shortest[j] {
                    shortest[j] = reduced;
                    path[j] = i;
                }
                if shortest[j] < lowest
                    || (shortest[j] == lowest && col_to_row[j] == usize::MAX)
                {
                    lowest = shortest[j];
                    index = j;
                }
            }
            min_val = lowest;
            let j = index;
            done[j] = true;
            if col_to_row[j] == usize::MAX {
                sink = j;
            } else {
                i = col_to_row[j];
            }
        }

        u[cur_row] += min_val;
        for &r in &visited_rows {
            if r != cur_row {
                u[r] += min_val - shortest[row_to_col[r]];
            }
        }
        for j in 0..n {
            if done[j] && j != sink {
                v[j] -= min_val - shortest[j];
            }
        }

        // augment along the alternating path back to cur_row
        let mut j = sink;
        loop {
            let i = path[j];
            col_to_row[j] = i;
            std::mem::swap(&mut row_to_col[i], &mut j);
            if i == cur_row {
                break;
            }
        }
    }

    let total_cost = row_to_col
        .iter()
        .enumerate()
        .map(|(i, &j)| at(i, j))
        .sum();
    Ok(Assignment {
        row_to_col,
        total_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn brute_force(n: usize, cost: &[f64]) -> f64 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let total: f64 = p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
            if total < best {
                best = total;
            }
        });
        best
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }

    #[test]
    fn zero_off_diagonal() {
        let cost = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let a = solve_lsap(3, &cost).unwrap();
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn two_by_two() {
        let a = solve_lsap(2, &[4.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.row_to_col, vec![1, 0]);
        assert_eq!(a.total_cost, 3.0);
    }

    #[test]
    fn random_matrices_match_brute_force() {
        let mut rng = rng::derive(99, &[6]);
        for _ in 0..50 {
            let cost: Vec<f64> = (0..36).map(|_| rng.random::<f64>() * 10.0).collect();
            let a = solve_lsap(6, &cost).unwrap();
            let best = brute_force(6, &cost);
            assert!((a.total_cost - best).abs() <= 1e-9, "{} vs {best}", a.total_cost);
            // result is a permutation
            let mut seen = vec![false; 6];
            for &j in &a.row_to_col {
                assert!(!seen[j]);
                seen[j] = true;
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_lsap(2, &[1.0, 2.0, 3.0]).is_err());
        assert!(solve_lsap(1, &[f64::NAN]).is_err());
    }
}
