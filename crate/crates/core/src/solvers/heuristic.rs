//! Non-certified solvers for sizes beyond the exact limits.

use crate::geometry::PointSet;

use super::tsp::tour_edges;
use super::{cost_matrix, Solution, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    /// Repeatedly pair the globally closest unmatched points.
    MmGreedy,
    /// Nearest-neighbour tour improved by 2-opt to a local optimum.
    TspTwoOpt,
}

pub fn solve_heuristic(points: &PointSet, p: f64, kind: HeuristicKind) -> Solution {
    let cost = cost_matrix(points, p);
    let (value, edges) = match kind {
        HeuristicKind::MmGreedy => {
            let pairs = greedy_pairs(&cost);
            (pairs.iter().map(|&(i, j)| cost[i][j]).sum(), pairs)
        }
        HeuristicKind::TspTwoOpt => {
            let mut order = nearest_neighbour_tour(&cost);
            two_opt(&cost, &mut order);
            (tour_cost(&cost, &order), tour_edges(&order))
        }
    };
    Solution {
        value,
        edges,
        certified: false,
        variant: Variant::Plain,
        diagnostics: Default::default(),
    }
}

pub(crate) fn greedy_pairs(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let n = cost.len();
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            cand.push((cost[i][j], i, j));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    for (_, i, j) in cand {
        if !used[i] && !used[j] {
            used[i] = true;
            used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

pub(crate) fn tour_cost(cost: &[Vec<f64>], order: &[usize]) -> f64 {
    match order.len() {
        0 | 1 => 0.0,
        n => (0..n).map(|i| cost[order[i]][order[(i + 1) % n]]).sum(),
    }
}

fn nearest_neighbour_tour(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let mut visited = vec![false; n];
    let mut order = vec![0];
    visited[0] = true;
    for _ in 1..n {
        let last = *order.last().unwrap();
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| cost[last][a].total_cmp(&cost[last][b]))
            .unwrap();
        visited[next] = true;
        order.push(next);
    }
    order
}

/// First-improvement 2-opt until no segment reversal helps.
fn two_opt(cost: &[Vec<f64>], order: &mut [usize]) {
    let n = order.len();
    if n < 4 {
        return;
    }
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (order[i], order[i + 1]);
                let (c, d) = (order[j], order[(j + 1) % n]);
                let delta = cost[a][c] + cost[b][d] - cost[a][b] - cost[c][d];
                if delta < -1e-12 {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{solve_mm_exact, solve_tsp_exact};
    use crate::sampling::{sample_uniform, SeedSpec};

    #[test]
    fn empty_input() {
        for kind in [HeuristicKind::MmGreedy, HeuristicKind::TspTwoOpt] {
            assert_eq!(solve_heuristic(&PointSet::empty(2), 1.0, kind).value, 0.0);
        }
    }

    #[test]
    fn never_beats_exact() {
        let seed = SeedSpec::new(99);
        for t in 0..200 {
            let n = 1 + (t % 11) as usize;
            let ps = sample_uniform(n, 2, &mut seed.points_rng(n as u64, t));
            for p in [0.5, 1.0, 1.7] {
                let h = solve_heuristic(&ps, p, HeuristicKind::TspTwoOpt);
                let e = solve_tsp_exact(&ps, p, 16).unwrap();
                assert!(h.value >= e.value - 1e-9);
                assert!(!h.certified);
                let h = solve_heuristic(&ps, p, HeuristicKind::MmGreedy);
                let e = solve_mm_exact(&ps, p, 512).unwrap();
                assert!(h.value >= e.value - 1e-9);
                assert_eq!(h.edges.len(), n / 2);
            }
        }
    }

    #[test]
    fn collinear_points_get_the_sorted_tour() {
        // shuffled equally spaced points on a line
        let xs = [0.5, 0.0, 0.875, 0.25, 0.125, 1.0, 0.625, 0.375, 0.75];
        let ps = PointSet::from_flat(1, xs.to_vec()).unwrap();
        let sol = solve_heuristic(&ps, 1.0, HeuristicKind::TspTwoOpt);
        assert!((sol.value - 2.0).abs() < 1e-9, "{}", sol.value);
        let sol = solve_heuristic(&ps, 2.0, HeuristicKind::TspTwoOpt);
        let exact = solve_tsp_exact(&ps, 2.0, 16).unwrap();
        assert!(sol.value >= exact.value - 1e-9);
    }
}
