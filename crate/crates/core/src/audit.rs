//! Randomized checks of the functional axioms on small exact instances.
//!
//! Each check draws a random instance from its own seeded stream, solves it
//! exactly, and tests one inequality. Checks are independent, so the suite
//! runs them in parallel; the report does not depend on scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{affine_image, sym_diff_count, Cube, Point, PointSet};
use crate::sampling::SeedSpec;
use crate::solvers::{
    growth_constant, structural_edge_count_ok, Functional, Instance, Mode, Variant,
};

/// Absolute tolerance on value comparisons.
pub const TOL: f64 = 1e-9;

/// Largest instance drawn by the exact checks.
pub const AXIOM_MAX_N: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axiom {
    Null,
    Scaling,
    Subadditivity,
    Smoothness,
    Growth,
    Domination,
    Superadditivity,
    Oracle,
}

impl Axiom {
    pub const ALL: [Axiom; 8] = [
        Axiom::Null,
        Axiom::Scaling,
        Axiom::Subadditivity,
        Axiom::Smoothness,
        Axiom::Growth,
        Axiom::Domination,
        Axiom::Superadditivity,
        Axiom::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Null => "null",
            Axiom::Scaling => "scaling",
            Axiom::Subadditivity => "subadditivity",
            Axiom::Smoothness => "smoothness",
            Axiom::Growth => "growth",
            Axiom::Domination => "domination",
            Axiom::Superadditivity => "superadditivity",
            Axiom::Oracle => "oracle",
        }
    }

    fn tag(self) -> u64 {
        Axiom::ALL.iter().position(|&a| a == self).unwrap() as u64 + 1
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Axiom::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::usage(format!("unknown axiom `{s}`")))
    }
}

/// Documented constant in the smoothness check.
pub fn smoothness_constant(d: usize, p: f64) -> f64 {
    8f64.powi(d as i32) * (d as f64).powf(p / 2.0)
}

/// Documented additive error in the subadditivity check.
pub fn subadditivity_constant(d: usize, p: f64) -> f64 {
    2f64.powi(d as i32) * (2.0 * (d as f64).sqrt()).powf(p)
}

/// Documented slack in the TSP dual superadditivity check, before the
/// `m^{d-p}` factor.
pub fn tsp_star_slack_constant(d: usize, p: f64) -> f64 {
    4.0 * (2.0 * (d as f64).sqrt()).powf(p)
}

#[derive(Debug, Clone)]
pub struct AuditConfig {
    /// Checks per (axiom, functional, power).
    pub checks: usize,
    pub seed: u64,
    pub dim: usize,
    pub powers: Vec<f64>,
}

impl AuditConfig {
    pub fn new(checks: usize, seed: u64) -> Self {
        AuditConfig {
            checks,
            seed,
            dim: 2,
            powers: vec![0.5, 1.0, 1.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub axiom: Axiom,
    pub functional: Functional,
    pub p: f64,
    pub checks: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen; negative when every check held with room.
    pub worst_excess: f64,
    /// Checks that needed the documented slack (TSP dual superadditivity).
    pub slack_used: usize,
    pub first_failure: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<15} {:<4} p={:<4} checks={} violations={} worst_excess={:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.axiom.name(),
            self.functional.name(),
            self.p,
            self.checks,
            self.violations,
            self.worst_excess,
        )?;
        if self.slack_used > 0 {
            write!(f, " slack_used={}", self.slack_used)?;
        }
        if let Some(msg) = &self.first_failure {
            write!(f, " first_failure=[{msg}]")?;
        }
        Ok(())
    }
}

/// Outcome of one check: `lhs <= rhs` is required.
struct Outcome {
    lhs: f64,
    rhs: f64,
    slack_used: bool,
    detail: String,
}

impl Outcome {
    fn new(lhs: f64, rhs: f64, detail: impl Into<String>) -> Self {
        Outcome {
            lhs,
            rhs,
            slack_used: false,
            detail: detail.into(),
        }
    }

    fn holds(&self) -> bool {
        self.lhs <= self.rhs + TOL
    }
}

fn solve(ps: &PointSet, cube: &Cube, p: f64, f: Functional, variant: Variant) -> Result<f64> {
    solve_with(ps, cube, p, f, variant, None, Mode::Exact)
}

fn solve_with(
    ps: &PointSet,
    cube: &Cube,
    p: f64,
    f: Functional,
    variant: Variant,
    factor: Option<f64>,
    mode: Mode,
) -> Result<f64> {
    let inst = Instance::new(ps.clone(), p, f)?
        .with_cube(cube.clone())
        .with_variant(variant)
        .with_mode(mode)
        .with_factor(factor);
    let sol = inst.solve()?;
    if variant == Variant::Plain && mode == Mode::Exact && !structural_edge_count_ok(f, ps.len(), &sol)
    {
        return Err(Error::usage(format!(
            "{f} solution on {} points has {} edges",
            ps.len(),
            sol.edges.len()
        )));
    }
    Ok(sol.value)
}

/// Uniform points in `cube`, with an occasional exact duplicate.
fn random_points(rng: &mut ChaCha8Rng, n: usize, cube: &Cube) -> PointSet {
    let d = cube.dim();
    let mut ps = PointSet::empty(d);
    for _ in 0..n {
        if !ps.is_empty() && rng.gen_bool(0.05) {
            let k = rng.gen_range(0..ps.len());
            let x = ps.point(k).to_vec();
            ps.push(&x);
        } else {
            let x: Vec<f64> = cube
                .corner()
                .iter()
                .map(|&c| c + cube.side() * rng.gen::<f64>())
                .collect();
            ps.push(&x);
        }
    }
    ps
}

fn random_cube(rng: &mut ChaCha8Rng, d: usize) -> Cube {
    let corner = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let side = 10f64.powf(rng.gen_range(-1.0..1.0));
    Cube::new(Point::new(corner).unwrap(), side).unwrap()
}

fn describe(ps: &PointSet) -> String {
    ps.to_text().replace('\n', "; ")
}

fn check_once(
    axiom: Axiom,
    f: Functional,
    p: f64,
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Outcome>> {
    let unit = Cube::unit(d);
    let mut out = Vec::new();
    match axiom {
        Axiom::Null => {
            let cube = random_cube(rng, d);
            for v in [Variant::Plain, Variant::Dual] {
                let value = solve(&PointSet::empty(d), &cube, p, f, v)?;
                out.push(Outcome::new(value.abs(), 0.0, format!("{v} on empty set")));
            }
        }
        Axiom::Scaling => {
            let n = rng.gen_range(0..=AXIOM_MAX_N);
            let ps = random_points(rng, n, &unit);
            let shift = Point::new((0..d).map(|_| rng.gen_range(-5.0..5.0)).collect())?;
            let t = 10f64.powf(rng.gen_range(-1.0..1.0));
            let image = affine_image(&ps, &shift, t)?;
            let cube = unit.affine_image(&shift, t)?;
            for v in [Variant::Plain, Variant::Dual] {
                let base = solve(&ps, &unit, p, f, v)?;
                let moved = solve(&image, &cube, p, f, v)?;
                let expected = t.powf(p) * base;
                let err = (moved - expected).abs();
                // relative comparison folded into the absolute form
                let allowed = 1e-9 * expected.abs().max(1.0) - TOL;
                out.push(Outcome::new(
                    err,
                    allowed,
                    format!("{v} t={t} n={n} moved={moved} expected={expected}"),
                ));
            }
        }
        Axiom::Subadditivity => {
            let n = rng.gen_range(0..=AXIOM_MAX_N);
            let ps = random_points(rng, n, &unit);
            let whole = solve(&ps, &unit, p, f, Variant::Plain)?;
            let mut parts = 0.0;
            for (cell, sub) in unit.subcubes(2).iter().zip(ps.split_by_cells(&unit, 2)) {
                parts += solve(&sub, cell, p, f, Variant::Plain)?;
            }
            let c = subadditivity_constant(d, p);
            out.push(Outcome::new(
                whole,
                parts + c,
                format!("whole={whole} parts={parts} points={}", describe(&ps)),
            ));
        }
        Axiom::Smoothness => {
            let n = rng.gen_range(0..=AXIOM_MAX_N);
            let a = random_points(rng, n, &unit);
            let deletions = rng.gen_range(0..=n.min(4));
            let room = (4 - deletions).min(AXIOM_MAX_N - (n - deletions));
            let insertions = rng.gen_range(0..=room);
            let mut keep: Vec<usize> = (0..n).collect();
            for _ in 0..deletions {
                let k = rng.gen_range(0..keep.len());
                keep.remove(k);
            }
            let mut b = a.select(&keep);
            let extra = random_points(rng, insertions, &unit);
            for x in extra.iter() {
                b.push(x);
            }
            let la = solve(&a, &unit, p, f, Variant::Plain)?;
            let lb = solve(&b, &unit, p, f, Variant::Plain)?;
            let diff = sym_diff_count(&a, &b)? as f64;
            let bound = smoothness_constant(d, p) * diff.powf((d as f64 - p) / d as f64);
            out.push(Outcome::new(
                (la - lb).abs(),
                bound,
                format!("L(A)={la} L(B)={lb} |A^B|={diff}"),
            ));
        }
        Axiom::Growth => {
            let n = rng.gen_range(0..=AXIOM_MAX_N);
            let cube = random_cube(rng, d);
            let ps = random_points(rng, n, &cube);
            let value = solve(&ps, &cube, p, f, Variant::Plain)?;
            let size = (n as f64).powf((d as f64 - p) / d as f64).max(1.0);
            let bound = growth_constant(f, d, p) * size * cube.side().powf(p);
            out.push(Outcome::new(value, bound, format!("n={n} side={}", cube.side())));
        }
        Axiom::Domination => {
            let n = rng.gen_range(0..=dual_limit(f));
            let ps = random_points(rng, n, &unit);
            let plain = solve(&ps, &unit, p, f, Variant::Plain)?;
            let dual = solve(&ps, &unit, p, f, Variant::Dual)?;
            out.push(Outcome::new(
                dual,
                plain,
                format!("dual={dual} plain={plain} points={}", describe(&ps)),
            ));
        }
        Axiom::Superadditivity => {
            let n = rng.gen_range(0..=10);
            let ps = random_points(rng, n, &unit);
            let cells = unit.subcubes(2);
            let split = ps.split_by_cells(&unit, 2);
            let mut factors = vec![None];
            if p >= 1.0 {
                factors.push(Some(0.5));
            }
            for factor in factors {
                let whole = solve_with(&ps, &unit, p, f, Variant::Dual, factor, Mode::Exact)?;
                let mut parts = 0.0;
                for (cell, sub) in cells.iter().zip(&split) {
                    parts += solve_with(sub, cell, p, f, Variant::Dual, factor, Mode::Exact)?;
                }
                let detail = format!(
                    "factor={factor:?} whole={whole} parts={parts} points={}",
                    describe(&ps)
                );
                let mut o = if f == Functional::Tsp {
                    let slack = tsp_star_slack_constant(d, p) * 2f64.powf(d as f64 - p);
                    Outcome::new(parts - slack, whole, detail)
                } else {
                    Outcome::new(parts, whole, detail)
                };
                o.slack_used = parts > whole + TOL;
                out.push(o);
            }
        }
        Axiom::Oracle => {
            let n = rng.gen_range(0..=oracle_plain_limit(f));
            let ps = random_points(rng, n, &unit);
            let exact = solve(&ps, &unit, p, f, Variant::Plain)?;
            let brute = solve_with(&ps, &unit, p, f, Variant::Plain, None, Mode::BruteOracle)?;
            out.push(Outcome::new(
                (exact - brute).abs(),
                0.0,
                format!("plain exact={exact} oracle={brute} points={}", describe(&ps)),
            ));
            let n = rng.gen_range(0..=7);
            let ps = random_points(rng, n, &unit);
            let exact = solve(&ps, &unit, p, f, Variant::Dual)?;
            let brute = solve_with(&ps, &unit, p, f, Variant::Dual, None, Mode::BruteOracle)?;
            out.push(Outcome::new(
                (exact - brute).abs(),
                0.0,
                format!("dual exact={exact} oracle={brute} points={}", describe(&ps)),
            ));
        }
    }
    Ok(out)
}

/// Plain sizes used by the oracle comparison.
pub fn oracle_plain_limit(f: Functional) -> usize {
    match f {
        Functional::Mst => 7,
        Functional::Mm => 10,
        Functional::Tsp => 8,
    }
}

fn dual_limit(f: Functional) -> usize {
    match f {
        Functional::Tsp => 10,
        _ => AXIOM_MAX_N,
    }
}

/// Runs `checks` independent checks of one axiom.
pub fn run_check(
    axiom: Axiom,
    f: Functional,
    p: f64,
    d: usize,
    checks: usize,
    seed: u64,
) -> Result<CheckReport> {
    let spec = SeedSpec::new(seed);
    let stream = axiom.tag() << 32 | (f as u64) << 16 | (p * 1000.0).round() as u64;
    let results: Vec<Result<Vec<Outcome>>> = (0..checks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.mix(stream, i as u64, d as u64));
            check_once(axiom, f, p, d, &mut rng)
        })
        .collect();
    let mut report = CheckReport {
        axiom,
        functional: f,
        p,
        checks: 0,
        violations: 0,
        worst_excess: f64::NEG_INFINITY,
        slack_used: 0,
        first_failure: None,
    };
    for r in results {
        for o in r? {
            report.checks += 1;
            report.worst_excess = report.worst_excess.max(o.lhs - o.rhs);
            report.slack_used += o.slack_used as usize;
            if !o.holds() {
                report.violations += 1;
                report.first_failure.get_or_insert(o.detail);
            }
        }
    }
    Ok(report)
}

/// Every axiom for every functional and power in `cfg`.
pub fn run_suite(cfg: &AuditConfig) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    for axiom in Axiom::ALL {
        for f in Functional::ALL {
            for &p in &cfg.powers {
                reports.push(run_check(axiom, f, p, cfg.dim, cfg.checks, cfg.seed)?);
            }
        }
    }
    Ok(reports)
}
