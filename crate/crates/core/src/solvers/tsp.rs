//! Exact traveling-salesman tours by subset dynamic programming.
//!
//! The tour is the cyclic sum over a permutation, so a two-point "tour"
//! traverses its edge twice.

use crate::error::{Error, Result};
use crate::geometry::PointSet;

use super::{cost_matrix, Solution, Variant};

/// Hard ceiling on the subset DP regardless of configured limits.
pub const TSP_DP_MAX: usize = 20;

/// Minimum closed tour through every point, as an ordered list of indices.
pub(crate) fn held_karp(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    match n {
        0 | 1 => return (0.0, (0..n).collect()),
        2 => return (2.0 * cost[0][1], vec![0, 1]),
        _ => {}
    }
    // point 0 is the fixed start; the DP ranges over subsets of 1..n
    let m = n - 1;
    let full = (1usize << m) - 1;
    let mut dp = vec![f64::INFINITY; (full + 1) * m];
    let mut parent = vec![u8::MAX; (full + 1) * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = cost[0][j + 1];
    }
    for mask in 1..=full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = dp[mask * m + j];
            if !here.is_finite() {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let cand = here + cost[j + 1][k + 1];
                if cand < dp[next * m + k] {
                    dp[next * m + k] = cand;
                    parent[next * m + k] = j as u8;
                }
            }
        }
    }
    let (mut last, mut best) = (0, f64::INFINITY);
    for j in 0..m {
        let cand = dp[full * m + j] + cost[j + 1][0];
        if cand < best {
            best = cand;
            last = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    let mut j = last;
    loop {
        order.push(j + 1);
        let pj = parent[mask * m + j];
        mask &= !(1 << j);
        if pj == u8::MAX {
            break;
        }
        j = pj as usize;
    }
    order.push(0);
    order.reverse();
    (best, order)
}

/// Closed-tour edges of an ordering.
pub(crate) fn tour_edges(order: &[usize]) -> Vec<(usize, usize)> {
    if order.len() < 2 {
        return Vec::new();
    }
    (0..order.len())
        .map(|i| (order[i], order[(i + 1) % order.len()]))
        .collect()
}

/// Exact minimum tour for at most `limit` points.
pub fn solve_tsp_exact(points: &PointSet, p: f64, limit: usize) -> Result<Solution> {
    let n = points.len();
    let limit = limit.min(TSP_DP_MAX);
    if n > limit {
        return Err(Error::Size {
            solver: "exact TSP",
            n,
            limit,
        });
    }
    let cost = cost_matrix(points, p);
    let (value, order) = held_karp(&cost);
    Ok(Solution {
        value,
        edges: tour_edges(&order),
        certified: true,
        variant: Variant::Plain,
        diagnostics: Default::default(),
    })
}
