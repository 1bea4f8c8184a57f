//! The plain functionals: minimal matching, minimal spanning tree and
//! traveling-salesman tour, each with `p`-th power edge weights.
//!
//! Every solver returns a [`Solution`] whose value is the sum of the costs of
//! its edges; [`Solution::recompute`] re-derives that sum from the points.

pub mod blossom;
pub mod heuristic;
pub mod mm;
pub mod mst;
pub mod oracle;
pub mod tsp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boundary::{self, DualConfig};
use crate::error::{Error, Result};
use crate::geometry::{dist_pow, Cube, PointSet};

pub use heuristic::{solve_heuristic, HeuristicKind};
pub use mm::solve_mm_exact;
pub use mst::solve_mst;
pub use tsp::solve_tsp_exact;

/// Edge endpoint standing for the cube boundary in dual solutions.
pub const BOUNDARY: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Functional {
    Mm,
    Mst,
    Tsp,
}

impl Functional {
    pub const ALL: [Functional; 3] = [Functional::Mm, Functional::Mst, Functional::Tsp];

    pub fn name(self) -> &'static str {
        match self {
            Functional::Mm => "mm",
            Functional::Mst => "mst",
            Functional::Tsp => "tsp",
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mm" => Ok(Functional::Mm),
            "mst" => Ok(Functional::Mst),
            "tsp" => Ok(Functional::Tsp),
            other => Err(Error::usage(format!("unknown functional `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    /// The boundary-rooted superadditive dual.
    Dual,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Dual => "dual",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plain" => Ok(Variant::Plain),
            "dual" | "boundary_dual" | "boundary-dual" => Ok(Variant::Dual),
            other => Err(Error::usage(format!("unknown variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    Heuristic,
    /// Exhaustive enumeration; tiny inputs only.
    BruteOracle,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Heuristic => "heuristic",
            Mode::BruteOracle => "brute_oracle",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Mode::Exact),
            "heuristic" => Ok(Mode::Heuristic),
            "brute" | "oracle" | "brute_oracle" | "brute-oracle" => Ok(Mode::BruteOracle),
            other => Err(Error::usage(format!("unknown mode `{other}`"))),
        }
    }
}

/// Edge power `p` and ambient dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerParams {
    pub p: f64,
    pub d: usize,
}

impl PowerParams {
    pub fn new(p: f64, d: usize) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::usage(format!("power must be positive, got {p}")));
        }
        if d == 0 {
            return Err(Error::usage("dimension must be at least 1"));
        }
        Ok(PowerParams { p, d })
    }

    /// `(d - p) / d`, the growth exponent of the functionals.
    pub fn growth_exponent(&self) -> f64 {
        (self.d as f64 - self.p) / self.d as f64
    }

    /// True when `0 < p < d`, the range where the rate results apply.
    pub fn in_rate_range(&self) -> bool {
        self.p < self.d as f64
    }
}

/// Largest inputs the exact solvers accept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub mm_exact: usize,
    pub tsp_exact: usize,
    pub tsp_star_exact: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            mm_exact: 512,
            tsp_exact: 16,
            tsp_star_exact: 12,
        }
    }
}

/// Count and total cost of boundary attachments in a dual solution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundaryDiagnostics {
    /// Distinct sample points with at least one boundary edge.
    pub attached: usize,
    /// Total cost of the boundary edges.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub value: f64,
    /// Index pairs into the point set; [`BOUNDARY`] marks the boundary.
    pub edges: Vec<(usize, usize)>,
    pub certified: bool,
    pub variant: Variant,
    pub diagnostics: BoundaryDiagnostics,
}

impl Solution {
    pub(crate) fn empty(variant: Variant, certified: bool) -> Self {
        Solution {
            value: 0.0,
            edges: Vec::new(),
            certified,
            variant,
            diagnostics: BoundaryDiagnostics::default(),
        }
    }

    /// Builds a solution from its edges, summing their costs. Boundary edges
    /// cost `factor * dist(x, boundary)^p`.
    pub(crate) fn from_edges(
        points: &PointSet,
        cube: &Cube,
        p: f64,
        factor: f64,
        edges: Vec<(usize, usize)>,
        variant: Variant,
        certified: bool,
    ) -> Self {
        let mut sol = Solution {
            value: 0.0,
            edges,
            certified,
            variant,
            diagnostics: BoundaryDiagnostics::default(),
        };
        sol.value = sol.recompute(points, cube, p, factor);
        if variant == Variant::Dual {
            sol.diagnostics = boundary::diagnostics_of(&sol.edges, points, cube, p, factor);
        }
        sol
    }

    /// Sum of edge costs implied by `edges`.
    pub fn recompute(&self, points: &PointSet, cube: &Cube, p: f64, factor: f64) -> f64 {
        self.edges
            .iter()
            .map(|&(i, j)| edge_value(points, cube, p, factor, i, j))
            .sum()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.edges
            .iter()
            .filter(|&&(i, j)| i == BOUNDARY || j == BOUNDARY)
            .count()
    }
}

#[inline]
pub(crate) fn geometry_cost(points: &PointSet, i: usize, j: usize, p: f64) -> f64 {
    dist_pow(points.point(i), points.point(j), p)
}

/// Dense `n x n` matrix of `p`-th power distances.
pub(crate) fn cost_matrix(points: &PointSet, p: f64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut c = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = geometry_cost(points, i, j, p);
            c[i][j] = v;
            c[j][i] = v;
        }
    }
    c
}

pub(crate) fn edge_value(
    points: &PointSet,
    cube: &Cube,
    p: f64,
    factor: f64,
    i: usize,
    j: usize,
) -> f64 {
    match (i == BOUNDARY, j == BOUNDARY) {
        (false, false) => dist_pow(points.point(i), points.point(j), p),
        (true, false) => factor * cube.face_dist_unchecked(points.point(j)).powf(p),
        (false, true) => factor * cube.face_dist_unchecked(points.point(i)).powf(p),
        (true, true) => 0.0,
    }
}

/// One solve request.
#[derive(Debug, Clone)]
pub struct Instance {
    pub points: PointSet,
    pub cube: Cube,
    pub params: PowerParams,
    pub functional: Functional,
    pub variant: Variant,
    pub mode: Mode,
    /// Boundary cost factor for duals; `None` picks it from `p`.
    pub factor_override: Option<f64>,
    pub limits: Limits,
}

impl Instance {
    /// An exact plain solve on the unit cube.
    pub fn new(points: PointSet, p: f64, functional: Functional) -> Result<Self> {
        let d = points.dim();
        Ok(Instance {
            cube: Cube::unit(d),
            params: PowerParams::new(p, d)?,
            points,
            functional,
            variant: Variant::Plain,
            mode: Mode::Exact,
            factor_override: None,
            limits: Limits::default(),
        })
    }

    pub fn with_cube(mut self, cube: Cube) -> Self {
        self.cube = cube;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_factor(mut self, factor: Option<f64>) -> Self {
        self.factor_override = factor;
        self
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn dual_config(&self) -> Result<DualConfig> {
        match self.factor_override {
            Some(f) => DualConfig::with_factor(f),
            None => Ok(DualConfig::for_power(self.params.p)),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.points.dim() != self.cube.dim() && !self.points.is_empty() {
            return Err(Error::usage(format!(
                "points are {}-dimensional but the cube is {}-dimensional",
                self.points.dim(),
                self.cube.dim()
            )));
        }
        if let Some(x) = self.points.iter().find(|x| !self.cube.contains(x)) {
            return Err(Error::usage(format!("point {x:?} lies outside the cube")));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<Solution> {
        self.validate()?;
        let (ps, cube, p) = (&self.points, &self.cube, self.params.p);
        match (self.variant, self.mode) {
            (Variant::Plain, Mode::Exact) => match self.functional {
                Functional::Mst => Ok(solve_mst(ps, p)),
                Functional::Mm => solve_mm_exact(ps, p, self.limits.mm_exact),
                Functional::Tsp => solve_tsp_exact(ps, p, self.limits.tsp_exact),
            },
            (Variant::Plain, Mode::Heuristic) => Ok(match self.functional {
                // the spanning tree is computed exactly at any size
                Functional::Mst => solve_mst(ps, p),
                Functional::Mm => solve_heuristic(ps, p, HeuristicKind::MmGreedy),
                Functional::Tsp => solve_heuristic(ps, p, HeuristicKind::TspTwoOpt),
            }),
            (Variant::Plain, Mode::BruteOracle) => {
                let value = match self.functional {
                    Functional::Mst => oracle::mst_prufer(ps, p)?,
                    Functional::Mm => oracle::mm_enumerate(ps, p)?,
                    Functional::Tsp => oracle::tsp_permutations(ps, p)?,
                };
                Ok(oracle_solution(value, Variant::Plain))
            }
            (Variant::Dual, mode) => {
                let cfg = self.dual_config()?;
                match mode {
                    Mode::Exact => match self.functional {
                        Functional::Mst => Ok(boundary::solve_mst_star(ps, cube, p, cfg)),
                        Functional::Mm => {
                            boundary::solve_mm_star(ps, cube, p, cfg, self.limits.mm_exact)
                        }
                        Functional::Tsp => {
                            boundary::solve_tsp_star(ps, cube, p, cfg, self.limits.tsp_star_exact)
                        }
                    },
                    Mode::Heuristic => Ok(match self.functional {
                        Functional::Mst => boundary::solve_mst_star(ps, cube, p, cfg),
                        Functional::Mm => boundary::mm_star_greedy(ps, cube, p, cfg),
                        Functional::Tsp => boundary::tsp_star_heuristic(ps, cube, p, cfg),
                    }),
                    Mode::BruteOracle => {
                        let value = match self.functional {
                            Functional::Mst => oracle::mst_star_partitions(ps, cube, p, cfg)?,
                            Functional::Mm => oracle::mm_star_configurations(ps, cube, p, cfg)?,
                            Functional::Tsp => oracle::tsp_star_enumerate(ps, cube, p, cfg)?,
                        };
                        Ok(oracle_solution(value, Variant::Dual))
                    }
                }
            }
        }
    }
}

/// Oracles report values only.
fn oracle_solution(value: f64, variant: Variant) -> Solution {
    Solution {
        value,
        ..Solution::empty(variant, true)
    }
}

/// Checks the edge-count rule of a plain solution.
pub fn structural_edge_count_ok(functional: Functional, n: usize, sol: &Solution) -> bool {
    let m = sol.edges.len();
    match functional {
        Functional::Mst => m == n.saturating_sub(1),
        Functional::Tsp => {
            if n >= 2 {
                m == n
            } else {
                m == 0
            }
        }
        Functional::Mm => m <= n / 2,
    }
}

/// Documented constant for the growth bound check.
pub fn growth_constant(functional: Functional, d: usize, p: f64) -> f64 {
    let base = 4.0 * (2.0 * (d as f64).sqrt()).powf(p);
    match functional {
        Functional::Tsp => 2.0 * base,
        _ => base,
    }
}

/// `value <= C (|A|^{(d-p)/d} v 1) s^p`, with `C` from [`growth_constant`].
pub fn growth_bound_check(
    points: &PointSet,
    cube: &Cube,
    p: f64,
    functional: Functional,
) -> Result<bool> {
    let d = cube.dim();
    let sol = Instance::new(points.clone(), p, functional)?
        .with_cube(cube.clone())
        .solve()?;
    let n = points.len() as f64;
    let size_term = if n > 0.0 {
        n.powf((d as f64 - p) / d as f64).max(1.0)
    } else {
        1.0
    };
    let bound = growth_constant(functional, d, p) * size_term * cube.side().powf(p);
    Ok(sol.value <= bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_check_trivial_cases() {
        let cube = Cube::unit(2);
        for f in Functional::ALL {
            assert!(growth_bound_check(&PointSet::empty(2), &cube, 1.0, f).unwrap());
        }
        let one = PointSet::from_rows(&[[0.4, 0.4]]);
        assert!(growth_bound_check(&one, &cube, 1.0, Functional::Mst).unwrap());
    }

    #[test]
    fn instance_rejects_points_outside_cube() {
        let ps = PointSet::from_rows(&[[0.5, 1.5]]);
        let err = Instance::new(ps, 1.0, Functional::Mst).unwrap().solve();
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn parse_names() {
        assert_eq!("MST".parse::<Functional>().unwrap(), Functional::Mst);
        assert_eq!("dual".parse::<Variant>().unwrap(), Variant::Dual);
        assert_eq!("heuristic".parse::<Mode>().unwrap(), Mode::Heuristic);
        assert!("steiner".parse::<Functional>().is_err());
    }
}
