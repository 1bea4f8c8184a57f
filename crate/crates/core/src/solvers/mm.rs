//! Minimal matching: `floor(n/2)` disjoint pairs of minimum total
//! `p`-th power length. Odd inputs leave exactly one point unmatched, chosen
//! optimally by adding a virtual vertex joined to every point at cost 0.

use crate::error::{Error, Result};
use crate::geometry::PointSet;

use super::blossom::min_cost_perfect_matching;
use super::{geometry_cost, Solution, Variant};

/// Exact minimal matching for at most `limit` points.
pub fn solve_mm_exact(points: &PointSet, p: f64, limit: usize) -> Result<Solution> {
    let n = points.len();
    if n > limit {
        return Err(Error::Size {
            solver: "exact MM",
            n,
            limit,
        });
    }
    let pairs = matching_pairs(points, p);
    let value = pairs.iter().map(|&(i, j)| geometry_cost(points, i, j, p)).sum();
    Ok(Solution {
        value,
        edges: pairs,
        certified: true,
        variant: Variant::Plain,
        diagnostics: Default::default(),
    })
}

fn matching_pairs(points: &PointSet, p: f64) -> Vec<(usize, usize)> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let nv = n + n % 2;
    let mut edges = Vec::with_capacity(nv * (nv - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, geometry_cost(points, i, j, p)));
        }
    }
    if nv > n {
        edges.extend((0..n).map(|i| (i, n, 0.0)));
    }
    let mate = min_cost_perfect_matching(nv, &edges).expect("complete graph has a perfect matching");
    (0..n).filter(|&i| mate[i] > i && mate[i] < n).map(|i| (i, mate[i])).collect()
}
