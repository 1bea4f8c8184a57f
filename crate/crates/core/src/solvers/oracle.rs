//! Exhaustive-enumeration oracles for tiny inputs.
//!
//! These share no code with the exact solvers beyond the edge-cost function:
//! spanning trees come from Prüfer sequences, matchings and dual
//! configurations from recursive role assignment, tours from permutations,
//! and dual partitions from restricted-growth strings.

use crate::boundary::DualConfig;
use crate::error::{Error, Result};
use crate::geometry::{Cube, PointSet};

use super::cost_matrix;

pub const MST_ORACLE_MAX: usize = 8;
pub const MM_ORACLE_MAX: usize = 12;
pub const TSP_ORACLE_MAX: usize = 9;
pub const DUAL_ORACLE_MAX: usize = 8;

fn check(solver: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::Size { solver, n, limit });
    }
    Ok(())
}

/// Decodes a Prüfer sequence over `0..n` into the tree's edges.
fn prufer_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, s));
        degree[leaf] = 0;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

/// Minimum over all `n^(n-2)` labeled spanning trees of a cost matrix.
fn min_spanning_tree_by_enumeration(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return cost[0][1];
    }
    let len = n - 2;
    let mut seq = vec![0usize; len];
    let mut best = f64::INFINITY;
    loop {
        let total: f64 = prufer_edges(&seq, n).iter().map(|&(a, b)| cost[a][b]).sum();
        best = best.min(total);
        // odometer increment
        let mut k = 0;
        while k < len {
            seq[k] += 1;
            if seq[k] < n {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
        if k == len {
            break;
        }
    }
    best
}

/// Minimum spanning tree value by enumerating every labeled tree.
pub fn mst_prufer(points: &PointSet, p: f64) -> Result<f64> {
    check("MST oracle", points.len(), MST_ORACLE_MAX)?;
    Ok(min_spanning_tree_by_enumeration(&cost_matrix(points, p)))
}

fn mm_rec(cost: &[Vec<f64>], free: &mut Vec<bool>, skip_left: bool) -> f64 {
    let Some(i) = free.iter().position(|&f| f) else {
        return 0.0;
    };
    free[i] = false;
    let mut best = f64::INFINITY;
    if skip_left {
        best = best.min(mm_rec(cost, free, false));
    }
    for j in i + 1..free.len() {
        if free[j] {
            free[j] = false;
            best = best.min(cost[i][j] + mm_rec(cost, free, skip_left));
            free[j] = true;
        }
    }
    free[i] = true;
    best
}

/// Minimal matching value over every pairing (one point skipped when odd).
pub fn mm_enumerate(points: &PointSet, p: f64) -> Result<f64> {
    let n = points.len();
    check("MM oracle", n, MM_ORACLE_MAX)?;
    let cost = cost_matrix(points, p);
    let mut free = vec![true; n];
    Ok(mm_rec(&cost, &mut free, n % 2 == 1))
}

/// Calls `visit` with every permutation of `items` (Heap's algorithm).
fn for_each_permutation(items: &mut [usize], visit: &mut impl FnMut(&[usize])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn cyclic_cost(cost: &[Vec<f64>], order: &[usize]) -> f64 {
    let n = order.len();
    (0..n).map(|i| cost[order[i]][order[(i + 1) % n]]).sum()
}

fn tsp_by_permutations(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    if n < 2 {
        return 0.0;
    }
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best = f64::INFINITY;
    for_each_permutation(&mut rest, &mut |perm| {
        let mut order = Vec::with_capacity(n);
        order.push(0);
        order.extend_from_slice(perm);
        best = best.min(cyclic_cost(cost, &order));
    });
    best
}

/// Minimum closed tour over all orderings with the first point fixed.
pub fn tsp_permutations(points: &PointSet, p: f64) -> Result<f64> {
    check("TSP oracle", points.len(), TSP_ORACLE_MAX)?;
    Ok(tsp_by_permutations(&cost_matrix(points, p)))
}

/// Visits every set partition of `0..n` as a block label per element
/// (restricted-growth strings).
fn for_each_partition(n: usize, visit: &mut impl FnMut(&[usize], usize)) {
    fn rec(i: usize, n: usize, labels: &mut Vec<usize>, blocks: usize, visit: &mut impl FnMut(&[usize], usize)) {
        if i == n {
            visit(labels, blocks);
            return;
        }
        for b in 0..=blocks {
            labels[i] = b;
            rec(i + 1, n, labels, blocks.max(b + 1), visit);
        }
    }
    let mut labels = vec![0; n];
    rec(0, n, &mut labels, 0, visit);
}

fn attach_costs(points: &PointSet, cube: &Cube, p: f64, cfg: DualConfig) -> Vec<f64> {
    points
        .iter()
        .map(|x| cfg.factor() * cube.face_dist_unchecked(x).powf(p))
        .collect()
}

fn sub_matrix(cost: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter()
        .map(|&i| idx.iter().map(|&j| cost[i][j]).collect())
        .collect()
}

fn partition_minimum(n: usize, part_cost: impl Fn(&[usize]) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    let mut cache = std::collections::HashMap::<u32, f64>::new();
    for_each_partition(n, &mut |labels, blocks| {
        let mut total = 0.0;
        for b in 0..blocks {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == b).collect();
            let key = members.iter().fold(0u32, |m, &i| m | (1 << i));
            total += *cache.entry(key).or_insert_with(|| part_cost(&members));
        }
        best = best.min(total);
    });
    best
}

/// MST dual: the plain tree, or a partition into parts each joined to the
/// boundary once at its cheapest point.
pub fn mst_star_partitions(points: &PointSet, cube: &Cube, p: f64, cfg: DualConfig) -> Result<f64> {
    let n = points.len();
    check("MST dual oracle", n, DUAL_ORACLE_MAX)?;
    if n == 0 {
        return Ok(0.0);
    }
    let cost = cost_matrix(points, p);
    let attach = attach_costs(points, cube, p, cfg);
    let plain = min_spanning_tree_by_enumeration(&cost);
    let parts = partition_minimum(n, |members| {
        let tree = min_spanning_tree_by_enumeration(&sub_matrix(&cost, members));
        let hook = members.iter().map(|&i| attach[i]).fold(f64::INFINITY, f64::min);
        tree + hook
    });
    Ok(plain.min(parts))
}

fn mm_star_rec(cost: &[Vec<f64>], attach: &[f64], free: &mut Vec<bool>, skip_left: bool) -> f64 {
    let Some(i) = free.iter().position(|&f| f) else {
        return 0.0;
    };
    free[i] = false;
    // boundary attachment
    let mut best = attach[i] + mm_star_rec(cost, attach, free, skip_left);
    if skip_left {
        best = best.min(mm_star_rec(cost, attach, free, false));
    }
    for j in i + 1..free.len() {
        if free[j] {
            free[j] = false;
            best = best.min(cost[i][j] + mm_star_rec(cost, attach, free, skip_left));
            free[j] = true;
        }
    }
    free[i] = true;
    best
}

/// MM dual: every point pairs with another point, attaches to the boundary,
/// or (at most one point) stays unmatched.
pub fn mm_star_configurations(points: &PointSet, cube: &Cube, p: f64, cfg: DualConfig) -> Result<f64> {
    let n = points.len();
    check("MM dual oracle", n, DUAL_ORACLE_MAX + 2)?;
    let cost = cost_matrix(points, p);
    let attach = attach_costs(points, cube, p, cfg);
    let mut free = vec![true; n];
    Ok(mm_star_rec(&cost, &attach, &mut free, true))
}

/// TSP dual: the plain tour, or a partition into paths whose two ends are
/// each attached to the boundary.
pub fn tsp_star_enumerate(points: &PointSet, cube: &Cube, p: f64, cfg: DualConfig) -> Result<f64> {
    let n = points.len();
    check("TSP dual oracle", n, DUAL_ORACLE_MAX)?;
    if n == 0 {
        return Ok(0.0);
    }
    let cost = cost_matrix(points, p);
    let attach = attach_costs(points, cube, p, cfg);
    let plain = tsp_by_permutations(&cost);
    let parts = partition_minimum(n, |members| {
        let mut order = members.to_vec();
        let mut best = f64::INFINITY;
        for_each_permutation(&mut order, &mut |perm| {
            let path: f64 = perm.windows(2).map(|w| cost[w[0]][w[1]]).sum();
            let ends = attach[perm[0]] + attach[perm[perm.len() - 1]];
            best = best.min(path + ends);
        });
        best
    });
    Ok(plain.min(parts))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prufer_counts_cayley() {
        // every sequence decodes to a tree with n-1 edges
        let edges = prufer_edges(&[3, 3, 3], 5);
        assert_eq!(edges.len(), 4);
        let mut count = 0;
        for_each_partition(4, &mut |_, _| count += 1);
        assert_eq!(count, 15); // Bell(4)
        let mut perms = 0;
        let mut items = vec![0, 1, 2, 3];
        for_each_permutation(&mut items, &mut |_| perms += 1);
        assert_eq!(perms, 24);
    }

    #[test]
    fn oracles_on_fixed_points() {
        let sq = PointSet::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]);
        assert!((tsp_permutations(&sq, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((mst_prufer(&sq, 1.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((mm_enumerate(&sq, 1.0).unwrap() - 2.0).abs() < 1e-12);
        let three = PointSet::from_rows(&[[0.0, 0.0], [0.0, 0.1], [0.0, 0.9]]);
        assert!((mm_enumerate(&three, 1.0).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn oracle_size_limits() {
        let ps = PointSet::from_flat(1, (0..10).map(|i| i as f64 / 10.0).collect()).unwrap();
        assert!(mst_prufer(&ps, 1.0).is_err());
        assert!(tsp_permutations(&ps, 1.0).is_err());
    }
}
