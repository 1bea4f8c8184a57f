//! Minimal spanning tree with `p`-th power edge weights.
//!
//! `x -> x^p` is increasing, so the optimal edge set is the ordinary
//! Euclidean MST for every `p`. Prim's algorithm runs on squared lengths
//! and the value is accumulated with the requested power afterwards.

use crate::geometry::PointSet;

use super::{Solution, Variant};

/// Dense Prim over vertices `0..n`, with `weight(i, j)` any monotone
/// transform of the true edge cost. Returns tree edges `(parent, child)`.
pub(crate) fn prim_dense(n: usize, weight: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    in_tree[0] = true;
    for j in 1..n {
        best[j] = weight(0, j);
    }
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_w = f64::INFINITY;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < next_w) {
                next = j;
                next_w = best[j];
            }
        }
        in_tree[next] = true;
        edges.push((parent[next], next));
        for j in 0..n {
            if !in_tree[j] {
                let w = weight(next, j);
                if w < best[j] {
                    best[j] = w;
                    parent[j] = next;
                }
            }
        }
    }
    edges
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact MST under `p`-th power weights. Empty and singleton sets cost 0.
pub fn solve_mst(points: &PointSet, p: f64) -> Solution {
    let edges = prim_dense(points.len(), |i, j| sq_dist(points.point(i), points.point(j)));
    let value = edges
        .iter()
        .map(|&(i, j)| super::geometry_cost(points, i, j, p))
        .sum();
    Solution {
        value,
        edges,
        certified: true,
        variant: Variant::Plain,
        diagnostics: Default::default(),
    }
}
