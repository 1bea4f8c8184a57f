//! Boundary-rooted dual functionals.
//!
//! In a dual, structures may attach sample points to the cube boundary, and
//! travel or pairing along the boundary is free. An attachment from `x`
//! costs `factor * dist(x, boundary)^p`, using the orthogonal projection
//! onto the nearest face. The factor is 1 for `p >= 1` and 1/2 for `p < 1`.
//!
//! * MST dual: minimum spanning tree of the points plus one virtual boundary
//!   vertex, or the plain tree if that is cheaper. Removing the virtual
//!   vertex from an optimal tree leaves components that each hang off the
//!   boundary by one edge.
//! * MM dual: each point pairs with another point, attaches to the boundary,
//!   or (at most one point) stays unmatched. Solved as a perfect matching on
//!   a graph with one boundary slot per point.
//! * TSP dual: the plain tour, or a partition of the points into paths whose
//!   two ends attach to the boundary. Solved by subset DP.

use crate::error::{Error, Result};
use crate::geometry::{Cube, PointSet};
use crate::solvers::blossom::min_cost_perfect_matching;
use crate::solvers::heuristic::greedy_pairs;
use crate::solvers::mst::{prim_dense, sq_dist};
use crate::solvers::tsp::{held_karp, tour_edges, TSP_DP_MAX};
use crate::solvers::{
    cost_matrix, solve_heuristic, solve_mst, BoundaryDiagnostics, HeuristicKind, Solution,
    Variant, BOUNDARY,
};

/// Price multiplier for boundary attachment edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualConfig {
    factor: f64,
}

impl DualConfig {
    /// Full price for `p >= 1`, half price for `0 < p < 1`.
    pub fn for_power(p: f64) -> Self {
        DualConfig {
            factor: if p < 1.0 { 0.5 } else { 1.0 },
        }
    }

    /// Explicit factor; only 1 and 1/2 are meaningful.
    pub fn with_factor(factor: f64) -> Result<Self> {
        if factor != 1.0 && factor != 0.5 {
            return Err(Error::usage(format!(
                "boundary cost factor must be 1 or 0.5, got {factor}"
            )));
        }
        Ok(DualConfig { factor })
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }
}

fn attach_costs(points: &PointSet, cube: &Cube, p: f64, cfg: DualConfig) -> Vec<f64> {
    points
        .iter()
        .map(|x| cfg.factor * cube.face_dist_unchecked(x).powf(p))
        .collect()
}

pub(crate) fn diagnostics_of(
    edges: &[(usize, usize)],
    points: &PointSet,
    cube: &Cube,
    p: f64,
    factor: f64,
) -> BoundaryDiagnostics {
    let mut touched = vec![false; points.len()];
    let mut cost = 0.0;
    for &(i, j) in edges {
        let x = match (i == BOUNDARY, j == BOUNDARY) {
            (true, false) => j,
            (false, true) => i,
            _ => continue,
        };
        touched[x] = true;
        cost += factor * cube.face_dist_unchecked(points.point(x)).powf(p);
    }
    BoundaryDiagnostics {
        attached: touched.iter().filter(|&&t| t).count(),
        cost,
    }
}

fn dual_solution(
    points: &PointSet,
    cube: &Cube,
    p: f64,
    cfg: DualConfig,
    edges: Vec<(usize, usize)>,
    certified: bool,
) -> Solution {
    Solution::from_edges(points, cube, p, cfg.factor, edges, Variant::Dual, certified)
}

/// Recasts a plain solution as a dual one with no boundary edges.
fn as_dual(mut sol: Solution) -> Solution {
    sol.variant = Variant::Dual;
    sol.diagnostics = BoundaryDiagnostics::default();
    sol
}

/// Exact MST dual.
pub fn solve_mst_star(points: &PointSet, cube: &Cube, p: f64, cfg: DualConfig) -> Solution {
    let n = points.len();
    let plain = as_dual(solve_mst(points, p));
    if n == 0 {
        return plain;
    }
    // factor * b^p < l^p  iff  (factor^{1/p} b)^2 < l^2, so Prim can run on
    // squared lengths with the boundary distance rescaled.
    let shrink = cfg.factor.powf(1.0 / p);
    let virt: Vec<f64> = points
        .iter()
        .map(|x| (shrink * cube.face_dist_unchecked(x)).powi(2))
        .collect();
    let tree = prim_dense(n + 1, |i, j| match (i == n, j == n) {
        (false, false) => sq_dist(points.point(i), points.point(j)),
        (true, false) => virt[j],
        (false, true) => virt[i],
        (true, true) => 0.0,
    });
    let edges = tree
        .into_iter()
        .map(|(i, j)| {
            let f = |v: usize| if v == n { BOUNDARY } else { v };
            (f(i), f(j))
        })
        .collect();
    let rooted = dual_solution(points, cube, p, cfg, edges, true);
    if rooted.value < plain.value {
        rooted
    } else {
        plain
    }
}

/// Exact MM dual for at most `limit` points.
pub fn solve_mm_star(
    points: &PointSet,
    cube: &Cube,
    p: f64,
    cfg: DualConfig,
    limit: usize,
) -> Result<Solution> {
    let n = points.len();
    if n > limit {
        return Err(Error::Size {
            solver: "exact MM dual",
            n,
            limit,
        });
    }
    if n == 0 {
        return Ok(dual_solution(points, cube, p, cfg, Vec::new(), true));
    }
    // vertices: points 0..n, boundary slot of point i at n+i, then the
    // "unmatched" vertex z = 2n and its partner z' = 2n+1
    let attach = attach_costs(points, cube, p, cfg);
    let cost = cost_matrix(points, p);
    let (z, zp) = (2 * n, 2 * n + 1);
    let mut edges = Vec::with_capacity(n * n + 3 * n + 1);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, cost[i][j]));
            edges.push((n + i, n + j, 0.0));
        }
        edges.push((i, n + i, attach[i]));
        edges.push((z, i, 0.0));
        edges.push((zp, n + i, 0.0));
    }
    edges.push((z, zp, 0.0));
    let mate = min_cost_perfect_matching(2 * n + 2, &edges)
        .expect("dual matching graph always has a perfect matching");
    let mut out = Vec::new();
    for i in 0..n {
        let m = mate[i];
        if m < n && m > i {
            out.push((i, m));
        } else if m == n + i {
            out.push((i, BOUNDARY));
        }
    }
    Ok(dual_solution(points, cube, p, cfg, out, true))
}

/// Exact TSP dual for at most `limit` points.
pub fn solve_tsp_star(
    points: &PointSet,
    cube: &Cube,
    p: f64,
    cfg: DualConfig,
    limit: usize,
) -> Result<Solution> {
    let n = points.len();
    let limit = limit.min(TSP_DP_MAX);
    if n > limit {
        return Err(Error::Size {
            solver: "exact TSP dual",
            n,
            limit,
        });
    }
    let cost = cost_matrix(points, p);
    let (tour_value, order) = held_karp(&cost);
    let plain = dual_solution(points, cube, p, cfg, tour_edges(&order), true);
    if n == 0 {
        return Ok(plain);
    }
    let attach = attach_costs(points, cube, p, cfg);
    let paths = PathCover::solve(&cost, &attach);
    if paths.value < tour_value {
        Ok(dual_solution(points, cube, p, cfg, paths.edges, true))
    } else {
        Ok(plain)
    }
}

/// Minimum-cost cover of all points by boundary-anchored paths.
struct PathCover {
    value: f64,
    edges: Vec<(usize, usize)>,
}

impl PathCover {
    fn solve(cost: &[Vec<f64>], attach: &[f64]) -> PathCover {
        let n = cost.len();
        let full = (1usize << n) - 1;
        // hp[T * n + j]: cheapest path through T ending at j, start attached
        let mut hp = vec![f64::INFINITY; (full + 1) * n];
        let mut prev = vec![usize::MAX; (full + 1) * n];
        for j in 0..n {
            hp[(1 << j) * n + j] = attach[j];
        }
        for t in 1..=full {
            for j in 0..n {
                let here = hp[t * n + j];
                if t & (1 << j) == 0 || !here.is_finite() {
                    continue;
                }
                for k in 0..n {
                    if t & (1 << k) != 0 {
                        continue;
                    }
                    let next = t | (1 << k);
                    let cand = here + cost[j][k];
                    if cand < hp[next * n + k] {
                        hp[next * n + k] = cand;
                        prev[next * n + k] = j;
                    }
                }
            }
        }
        // part[T]: cheapest single anchored path covering T, and its end
        let mut part = vec![(f64::INFINITY, usize::MAX); full + 1];
        for (t, slot) in part.iter_mut().enumerate().skip(1) {
            for j in 0..n {
                if t & (1 << j) != 0 {
                    let v = hp[t * n + j] + attach[j];
                    if v < slot.0 {
                        *slot = (v, j);
                    }
                }
            }
        }
        // cover[S]: best partition of S into anchored paths; the part holding
        // the lowest element of S is chosen first
        let mut cover = vec![f64::INFINITY; full + 1];
        let mut choice = vec![0usize; full + 1];
        cover[0] = 0.0;
        for s in 1..=full {
            let low = s & s.wrapping_neg();
            let rest = s ^ low;
            // enumerate subsets of `rest`, each joined with `low`
            let mut sub = rest;
            loop {
                let t = sub | low;
                let cand = part[t].0 + cover[s ^ t];
                if cand < cover[s] {
                    cover[s] = cand;
                    choice[s] = t;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
        let mut edges = Vec::new();
        let mut s = full;
        while s != 0 {
            let t = choice[s];
            let mut end = part[t].1;
            let mut mask = t;
            edges.push((end, BOUNDARY));
            loop {
                let before = prev[mask * n + end];
                mask &= !(1 << end);
                if before == usize::MAX {
                    break;
                }
                edges.push((before, end));
                end = before;
            }
            edges.push((end, BOUNDARY));
            s ^= t;
        }
        PathCover {
            value: cover[full],
            edges,
        }
    }
}

/// Greedy MM dual: cheapest pairs and boundary attachments first, then the
/// most expensive attachment dropped as the single unmatched point.
pub fn mm_star_greedy(points: &PointSet, cube: &Cube, p: f64, cfg: DualConfig) -> Solution {
    let n = points.len();
    let attach = attach_costs(points, cube, p, cfg);
    let cost = cost_matrix(points, p);
    // pairs that beat both of their attachments
    let pairs: Vec<(usize, usize)> = greedy_pairs(&cost)
        .into_iter()
        .filter(|&(i, j)| cost[i][j] < attach[i] + attach[j])
        .collect();
    let mut paired = vec![false; n];
    for &(i, j) in &pairs {
        paired[i] = true;
        paired[j] = true;
    }
    let mut edges = pairs;
    let loose: Vec<usize> = (0..n).filter(|&i| !paired[i]).collect();
    let skip = loose
        .iter()
        .copied()
        .max_by(|&a, &b| attach[a].total_cmp(&attach[b]));
    edges.extend(
        loose
            .into_iter()
            .filter(|&i| Some(i) != skip)
            .map(|i| (i, BOUNDARY)),
    );
    dual_solution(points, cube, p, cfg, edges, false)
}

/// Feasible TSP dual: the better of a 2-opt tour, the tour opened at its
/// best edge into one anchored path, and all-singleton paths.
pub fn tsp_star_heuristic(points: &PointSet, cube: &Cube, p: f64, cfg: DualConfig) -> Solution {
    let n = points.len();
    let tour = as_dual(solve_heuristic(points, p, HeuristicKind::TspTwoOpt));
    if n == 0 {
        return Solution { certified: false, ..tour };
    }
    let attach = attach_costs(points, cube, p, cfg);
    let mut best = Solution { certified: false, ..tour.clone() };

    let singles: Vec<(usize, usize)> = (0..n).flat_map(|i| [(i, BOUNDARY), (i, BOUNDARY)]).collect();
    let cand = dual_solution(points, cube, p, cfg, singles, false);
    if cand.value < best.value {
        best = cand;
    }
    if tour.edges.len() >= 2 {
        let cost = |i: usize, j: usize| crate::solvers::edge_value(points, cube, p, cfg.factor, i, j);
        let (cut, _) = tour
            .edges
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| (k, attach[a] + attach[b] - cost(a, b)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        let (a, b) = tour.edges[cut];
        let mut edges: Vec<(usize, usize)> = tour
            .edges
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != cut)
            .map(|(_, &e)| e)
            .collect();
        edges.push((a, BOUNDARY));
        edges.push((b, BOUNDARY));
        let cand = dual_solution(points, cube, p, cfg, edges, false);
        if cand.value < best.value {
            best = cand;
        }
    }
    best
}

/// Boundary attachment count and cost of a dual solution.
pub fn boundary_diagnostics(sol: &Solution) -> Result<(usize, f64)> {
    if sol.variant != Variant::Dual {
        return Err(Error::usage(
            "boundary diagnostics exist only for dual solutions",
        ));
    }
    Ok((sol.diagnostics.attached, sol.diagnostics.cost))
}
