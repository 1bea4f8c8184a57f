//! Paired gap experiments.
//!
//! Every gap is the mean of a per-trial difference computed on coupled
//! samples: both sides of the difference see the same point stream, so
//! `U_{n+k}` extends `U_n`, and the Poissonized sample `U_N` is a prefix or
//! extension of `U_n` with `N` drawn from a separate count stream.

use std::fmt;

use rayon::prelude::*;

use crate::boundary::boundary_diagnostics;
use crate::error::{Error, Result};
use crate::sampling::{
    approximate_block, density_power_integral, l1_gap, poisson_count, sample_uniform,
    BlockDensity, Density, HolderDensity, Sampler, SeedSpec,
};
use crate::solvers::{PowerParams, Variant};

use super::fit::{log_slope, Regime, SlopeFit};
use super::{check_trials, summarize, trial_values, Experiment, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapKind {
    /// `L - L*` on the same sample.
    Closeness,
    /// `L(U_{n+k}) - L(U_n)`; negative `k` removes points.
    Perturbation,
    /// `L(U_N) - L(U_n)` with `N ~ Poisson(n)`.
    Poissonization,
    /// Number of sample points attached to the boundary in the dual.
    BoundaryCount,
    /// Total cost of the dual's boundary edges.
    BoundaryCost,
}

impl GapKind {
    pub fn name(self) -> &'static str {
        match self {
            GapKind::Closeness => "closeness",
            GapKind::Perturbation => "perturbation",
            GapKind::Poissonization => "poissonization",
            GapKind::BoundaryCount => "boundary_count",
            GapKind::BoundaryCost => "boundary_cost",
        }
    }
}

impl fmt::Display for GapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapPoint {
    pub n: usize,
    /// Size offset for perturbation gaps, 0 otherwise.
    pub k: i64,
    pub mean: f64,
    pub stderr: f64,
    /// Smallest per-trial value.
    pub min: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    pub kind: GapKind,
    pub functional: crate::solvers::Functional,
    pub d: usize,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub points: Vec<GapPoint>,
}

impl GapSeries {
    fn new(kind: GapKind, exp: &Experiment, trials: usize, seed: &SeedSpec) -> Self {
        GapSeries {
            kind,
            functional: exp.functional,
            d: exp.params.d,
            p: exp.params.p,
            trials,
            seed: seed.experiment_seed,
            points: Vec::new(),
        }
    }

    fn push(&mut self, n: usize, k: i64, values: &[f64]) {
        let (mean, stderr) = summarize(values);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        self.points.push(GapPoint {
            n,
            k,
            mean,
            stderr,
            min,
        });
    }

    /// `(n, mean, stderr)` triples for slope fits.
    pub fn triples(&self) -> Vec<(usize, f64, f64)> {
        self.points.iter().map(|g| (g.n, g.mean, g.stderr)).collect()
    }
}

fn uniform_only(exp: &Experiment) -> Result<()> {
    if exp.sampler != Sampler::Uniform {
        return Err(Error::usage("gap experiments draw uniform samples"));
    }
    Ok(())
}

/// Per-`n` paired estimate of `E[L - L*]`.
pub fn closeness_gap(
    exp: &Experiment,
    grid: &[usize],
    trials: usize,
    seed: &SeedSpec,
) -> Result<GapSeries> {
    check_trials(trials)?;
    uniform_only(exp)?;
    let mut series = GapSeries::new(GapKind::Closeness, exp, trials, seed);
    for &n in grid {
        let values = trial_values(trials, |t| {
            let ps = exp.draw(n, seed, t)?;
            let plain = exp.solve(&ps, Variant::Plain)?.value;
            let dual = exp.solve(&ps, Variant::Dual)?.value;
            Ok(plain - dual)
        })?;
        series.push(n, 0, &values);
    }
    Ok(series)
}

/// Paired estimates of `E[L(U_{n+k}) - L(U_n)]` for each `k` in `offsets`
/// (negative `k` drops the last `|k|` points).
pub fn perturbation_gaps(
    exp: &Experiment,
    n: usize,
    offsets: &[i64],
    trials: usize,
    seed: &SeedSpec,
) -> Result<GapSeries> {
    check_trials(trials)?;
    uniform_only(exp)?;
    let mut series = GapSeries::new(GapKind::Perturbation, exp, trials, seed);
    let d = exp.params.d;
    for &k in offsets {
        if k.unsigned_abs() as usize > n / 2 && k != 0 {
            return Err(Error::usage(format!("offset {k} exceeds n/2 for n={n}")));
        }
        let values = trial_values(trials, |t| {
            let big = n + k.max(0) as usize;
            let all = sample_uniform(big, d, &mut seed.points_rng(n as u64, t));
            let base = exp.solve(&all.prefix(n), exp.variant)?.value;
            if k == 0 {
                return Ok(0.0);
            }
            let moved = (n as i64 + k) as usize;
            Ok(exp.solve(&all.prefix(moved), exp.variant)?.value - base)
        })?;
        series.push(n, k, &values);
    }
    Ok(series)
}

/// Per-`n` paired estimate of `E[L(U_N) - L(U_n)]` with `N ~ Poisson(n)`.
pub fn poissonization_gap(
    exp: &Experiment,
    grid: &[usize],
    trials: usize,
    seed: &SeedSpec,
) -> Result<GapSeries> {
    check_trials(trials)?;
    uniform_only(exp)?;
    let mut series = GapSeries::new(GapKind::Poissonization, exp, trials, seed);
    let d = exp.params.d;
    for &n in grid {
        let values = trial_values(trials, |t| {
            let count = poisson_count(n as f64, &mut seed.count_rng(n as u64, t))?;
            let all = sample_uniform(n.max(count), d, &mut seed.points_rng(n as u64, t));
            let fixed = exp.solve(&all.prefix(n), exp.variant)?.value;
            let poisson = exp.solve(&all.prefix(count), exp.variant)?.value;
            Ok(poisson - fixed)
        })?;
        series.push(n, 0, &values);
    }
    Ok(series)
}

/// Boundary attachment count and cost of the exact dual, per `n`.
pub fn boundary_growth(
    exp: &Experiment,
    grid: &[usize],
    trials: usize,
    seed: &SeedSpec,
) -> Result<(GapSeries, GapSeries)> {
    check_trials(trials)?;
    uniform_only(exp)?;
    let mut count = GapSeries::new(GapKind::BoundaryCount, exp, trials, seed);
    let mut cost = GapSeries::new(GapKind::BoundaryCost, exp, trials, seed);
    for &n in grid {
        let pairs: Vec<(f64, f64)> = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let ps = exp.draw(n, seed, t)?;
                let sol = exp.solve(&ps, Variant::Dual)?;
                let (nb, lb) = boundary_diagnostics(&sol)?;
                Ok((nb as f64, lb))
            })
            .collect::<Result<_>>()?;
        let nb: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let lb: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        count.push(n, 0, &nb);
        cost.push(n, 0, &lb);
    }
    Ok((count, cost))
}

/// Non-uniform sampling density for [`nonuniform_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub enum NonUniform {
    /// Fixed block density.
    Block(BlockDensity),
    /// Smooth density; each `n` also reports its block approximation at
    /// level `m = n^{1/(beta (d-p) + d)}`.
    Holder(HolderDensity),
}

/// One size of a non-uniform experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPoint {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `mean / n^{(d-p)/d}`.
    pub normalized: f64,
    /// `alpha_hat * int density^{(d-p)/d}`.
    pub target: f64,
    /// `|normalized - target|`.
    pub gap: f64,
    pub gap_stderr: f64,
    /// Level of the block density used for this `n`.
    pub level: usize,
    /// `int |f - phi|` for the Hölder path.
    pub l1_gap: Option<f64>,
    /// Matching bound `d^{beta/2} K m^{-beta}`.
    pub l1_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub points: Vec<DensityPoint>,
    pub slope: SlopeFit,
    /// Slope of the bound the fitted slope is compared against.
    pub regime_exponent: f64,
    pub allowance: f64,
    /// Gap at the largest size is below the gap at the smallest.
    pub shrinks: bool,
    pub verdict: Verdict,
}

/// Level `m = n^{1/(beta (d-p) + d)}`, rounded, at least 1.
pub fn holder_level(n: usize, beta: f64, params: &PowerParams) -> usize {
    let d = params.d as f64;
    let m = (n as f64).powf(1.0 / (beta * (d - params.p) + d));
    (m.round() as usize).max(1)
}

/// Bound exponent in `n` for a fixed block density.
pub fn block_rate_exponent(params: &PowerParams) -> Result<f64> {
    let d = params.d as f64;
    Ok(match Regime::of(params)? {
        Regime::Subcritical => -1.0 / d,
        _ => -(d - params.p) / d,
    })
}

/// Bound exponent in `n` for a Hölder density of smoothness `beta <= 1`.
pub fn holder_rate_exponent(params: &PowerParams, beta: f64) -> Result<f64> {
    let (d, p) = (params.d as f64, params.p);
    let e = (d - p) / d;
    Ok(match Regime::of(params)? {
        Regime::Subcritical => -(beta * e) / ((beta * e + 1.0) * d),
        Regime::CriticalLog => -beta / (d * (beta + d)),
        Regime::CriticalUnit | Regime::Supercritical => -(beta * e) / (beta + d),
    })
}

/// Compares normalized means under a non-uniform density with the limit
/// `alpha_hat * int density^{(d-p)/d}` and fits the decay of the gap.
///
/// `alpha` is `(alpha_hat, stderr)` from a uniform fit for the same
/// functional and `(d, p)`. The slope must not exceed the bound's exponent by
/// more than `allowance`; a fit that cannot separate the gap from noise is
/// inconclusive.
pub fn nonuniform_experiment(
    exp: &Experiment,
    density: &NonUniform,
    grid: &[usize],
    trials: usize,
    seed: &SeedSpec,
    alpha: (f64, f64),
    allowance: f64,
) -> Result<DensityReport> {
    check_trials(trials)?;
    let params = exp.params;
    let e = params.growth_exponent();
    let (integral, sampler, bound_exponent) = match density {
        NonUniform::Block(phi) => (
            density_power_integral(&Density::Block(phi.clone()), e)?,
            Sampler::Block(phi.clone()),
            block_rate_exponent(&params)?,
        ),
        NonUniform::Holder(f) => (
            density_power_integral(&Density::Holder(f.clone()), e)?,
            Sampler::Holder(f.clone()),
            holder_rate_exponent(&params, f.smoothness())?,
        ),
    };
    let run = exp.clone().with_sampler(sampler);
    let target = alpha.0 * integral;
    let target_se = alpha.1 * integral;
    let mut points = Vec::new();
    for &n in grid {
        let est = super::mc_mean(&run, n, trials, seed)?;
        let scale = (n as f64).powf(e);
        let normalized = est.mean / scale;
        let (level, l1, bound) = match density {
            NonUniform::Block(phi) => (phi.level(), None, None),
            NonUniform::Holder(f) => {
                let m = holder_level(n, f.smoothness(), &params);
                let phi = approximate_block(f, m)?;
                (m, Some(l1_gap(f, &phi)?), Some(f.block_gap_bound(m)))
            }
        };
        points.push(DensityPoint {
            n,
            mean: est.mean,
            stderr: est.stderr,
            normalized,
            target,
            gap: (normalized - target).abs(),
            gap_stderr: ((est.stderr / scale).powi(2) + target_se.powi(2)).sqrt(),
            level,
            l1_gap: l1,
            l1_bound: bound,
        });
    }
    let triples: Vec<(usize, f64, f64)> =
        points.iter().map(|q| (q.n, q.gap, q.gap_stderr)).collect();
    let slope = log_slope(&triples);
    let shrinks = match (points.first(), points.last()) {
        (Some(a), Some(b)) => b.gap < a.gap,
        _ => false,
    };
    let verdict = match slope.status {
        super::SlopeStatus::Resolved => {
            Verdict::from_bool(slope.slope <= bound_exponent + allowance && shrinks)
        }
        _ => Verdict::Inconclusive,
    };
    Ok(DensityReport {
        points,
        slope,
        regime_exponent: bound_exponent,
        allowance,
        shrinks,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::Functional;

    fn mst(p: f64) -> Experiment {
        Experiment::new(Functional::Mst, p, 2).unwrap()
    }

    #[test]
    fn zero_offset_gap_is_exactly_zero() {
        let g = perturbation_gaps(&mst(1.0), 64, &[0, 1, -1], 20, &SeedSpec::new(3)).unwrap();
        assert_eq!(g.points[0].mean, 0.0);
        assert_eq!(g.points[0].stderr, 0.0);
        // more points make a longer tree on average
        assert!(g.points[1].mean > 0.0);
        assert!(g.points[2].mean < 0.0);
    }

    #[test]
    fn closeness_gap_is_pointwise_nonnegative() {
        for p in [0.5, 1.0] {
            let g = closeness_gap(&mst(p), &[16, 64], 30, &SeedSpec::new(4)).unwrap();
            for pt in &g.points {
                assert!(pt.min >= 0.0);
            }
        }
    }

    #[test]
    fn boundary_count_of_single_point() {
        let exp = mst(1.0).with_variant(Variant::Dual);
        let (count, _) = boundary_growth(&exp, &[1], 50, &SeedSpec::new(5)).unwrap();
        assert!(count.points[0].min >= 0.0);
        assert!(count.points[0].mean <= 1.0);
    }

    #[test]
    fn poissonization_gap_runs() {
        let g = poissonization_gap(&mst(1.0), &[32, 64], 20, &SeedSpec::new(6)).unwrap();
        assert_eq!(g.points.len(), 2);
        assert!(g.points.iter().all(|p| p.mean.is_finite()));
    }

    #[test]
    fn rate_exponents() {
        let params = PowerParams::new(1.0, 2).unwrap();
        assert!((block_rate_exponent(&params).unwrap() + 0.5).abs() < 1e-12);
        assert!((holder_rate_exponent(&params, 1.0).unwrap() + 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(holder_level(2048, 1.0, &params), 13);
        assert_eq!(holder_level(1, 1.0, &params), 1);
    }

    #[test]
    fn uniform_block_density_matches_uniform_target() {
        let params = mst(1.0);
        let phi = BlockDensity::uniform(2, 2);
        let r = nonuniform_experiment(
            &params,
            &NonUniform::Block(phi),
            &[64, 128, 256],
            20,
            &SeedSpec::new(7),
            (0.7, 0.0),
            0.1,
        )
        .unwrap();
        assert!(r.points.iter().all(|p| (p.target - 0.7).abs() < 1e-12));
    }
}
