//! Minimum-cost rectangular assignment (Hungarian algorithm with potentials).

/// Assigns each row to a distinct column minimizing the summed cost.
///
/// `cost` is `rows × cols` with `rows <= cols`. Returns the column chosen for
/// every row. Runs in `O(rows² · cols)`.
pub fn solve(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs rows <= cols, got {n}x{m}");

    // 1-based potentials; column 0 is a virtual start node
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut min_to = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0usize; n];
    for j in 1..=m {
        if owner[j] != 0 {
            result[owner[j] - 1] = j - 1;
        }
    }
    result
}

pub fn total_cost(cost: &[Vec<f64>], assignment: &[usize]) -> f64 {
    assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum()
}

/// Optimal assignment that, among all optimal ones, picks the lowest column
/// for row 0, then for row 1, and so on.
pub fn solve_lexicographic(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    let best = total_cost(cost, &solve(cost));
    let tol = 1e-12 * best.abs().max(1.0);

    let mut fixed: Vec<usize> = Vec::with_capacity(n);
    for row in 0..n {
        let mut chosen = None;
        for col in (0..m).filter(|c| !fixed.contains(c)) {
            let trial: Vec<usize> = fixed.iter().copied().chain(std::iter::once(col)).collect();
            let prefix: f64 = trial.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            let rest_rows = &cost[row + 1..];
            let rest_cost = if rest_rows.is_empty() {
                0.0
            } else {
                let free: Vec<usize> = (0..m).filter(|c| !trial.contains(c)).collect();
                let sub: Vec<Vec<f64>> = rest_rows
                    .iter()
                    .map(|r| free.iter().map(|&c| r[c]).collect())
                    .collect();
                total_cost(&sub, &solve(&sub))
            };
            if prefix + rest_cost <= best + tol {
                chosen = Some(col);
                break;
            }
        }
        // the global optimum always admits some column, so this only guards round-off
        fixed.push(chosen.unwrap_or_else(|| solve(cost)[row]));
    }
    fixed
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_diagonal_when_cheapest() {
        let cost = vec![vec![0.0, 5.0, 5.0], vec![5.0, 0.0, 5.0], vec![5.0, 5.0, 0.0]];
        assert_eq!(solve(&cost), vec![0, 1, 2]);
    }

    #[test]
    fn classic_example() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = solve(&cost);
        assert_eq!(total_cost(&cost, &a), 5.0);
    }

    #[test]
    fn rectangular_leaves_worst_column() {
        let cost = vec![vec![1.0, 9.0, 0.5], vec![9.0, 1.0, 0.7]];
        let a = solve(&cost);
        assert_eq!(a, vec![2, 1]);
    }

    #[test]
    fn ties_go_to_lowest_column() {
        let cost = vec![vec![1.0, 1.0, 1.0], vec![1.0, 1.0, 1.0]];
        assert_eq!(solve_lexicographic(&cost), vec![0, 1]);
    }
}
