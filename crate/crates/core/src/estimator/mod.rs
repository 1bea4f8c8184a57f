//! Monte Carlo means of the functionals and the experiments built on them.
//!
//! Trial `t` at size `n` always draws from the stream `(seed, n, t)`.
//! Trials run in parallel on the current rayon pool, but results are
//! gathered in trial order and reduced sequentially with compensated
//! summation, so every estimate is bit-identical for any thread count.

pub mod fit;
pub mod gaps;
pub mod output;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Cube, PointSet};
use crate::sampling::{Sampler, SeedSpec};
use crate::solvers::{Functional, Instance, Limits, Mode, PowerParams, Solution, Variant};

pub use fit::{fit_alpha, log_slope, residual_rate, RateFit, RateModel, Regime, SlopeFit, SlopeStatus};
pub use gaps::{
    boundary_growth, closeness_gap, nonuniform_experiment, perturbation_gaps, poissonization_gap,
    DensityPoint, DensityReport, GapKind, GapPoint, GapSeries, NonUniform,
};

/// What to solve on each sample.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub functional: Functional,
    pub variant: Variant,
    pub params: PowerParams,
    pub sampler: Sampler,
    pub mode: Mode,
    pub factor: Option<f64>,
    pub limits: Limits,
}

impl Experiment {
    /// Plain exact solves on uniform samples.
    pub fn new(functional: Functional, p: f64, d: usize) -> Result<Self> {
        Ok(Experiment {
            functional,
            variant: Variant::Plain,
            params: PowerParams::new(p, d)?,
            sampler: Sampler::Uniform,
            mode: Mode::Exact,
            factor: None,
            limits: Limits::default(),
        })
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_factor(mut self, factor: Option<f64>) -> Self {
        self.factor = factor;
        self
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn dim(&self) -> usize {
        self.params.d
    }

    /// Solves `points` on the unit cube with this experiment's settings.
    pub fn solve(&self, points: &PointSet, variant: Variant) -> Result<Solution> {
        Instance::new(points.clone(), self.params.p, self.functional)?
            .with_cube(Cube::unit(self.params.d))
            .with_variant(variant)
            .with_mode(self.mode)
            .with_factor(self.factor)
            .with_limits(self.limits)
            .solve()
    }

    pub fn draw(&self, n: usize, seed: &SeedSpec, trial: u64) -> Result<PointSet> {
        self.sampler.draw(n, self.params.d, seed, trial)
    }
}

/// Mean and standard error of one functional at one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub functional: Functional,
    pub variant: Variant,
    pub d: usize,
    pub p: f64,
    pub sampler: String,
    pub n: usize,
    pub trials: usize,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Neumaier-compensated sum in slice order.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean and `sd / sqrt(len)`.
pub fn summarize(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(values) / k as f64;
    if k < 2 {
        return (mean, f64::NAN);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = compensated_sum(&sq) / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

/// Evaluates `f(trial)` for every trial, in parallel, returning results in
/// trial order.
pub fn trial_values<F>(trials: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Result<f64> + Sync + Send,
{
    (0..trials as u64).into_par_iter().map(f).collect()
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < 2 {
        return Err(Error::usage(format!("need at least 2 trials, got {trials}")));
    }
    Ok(())
}

/// Monte Carlo mean of the experiment's functional at size `n`.
pub fn mc_mean(exp: &Experiment, n: usize, trials: usize, seed: &SeedSpec) -> Result<Estimate> {
    check_trials(trials)?;
    let values = trial_values(trials, |t| {
        let ps = exp.draw(n, seed, t)?;
        Ok(exp.solve(&ps, exp.variant)?.value)
    })?;
    let (mean, stderr) = summarize(&values);
    Ok(Estimate {
        functional: exp.functional,
        variant: exp.variant,
        d: exp.params.d,
        p: exp.params.p,
        sampler: exp.sampler.name(),
        n,
        trials,
        mean,
        stderr,
        seed: seed.experiment_seed,
    })
}

/// [`mc_mean`] at every size of `grid`.
pub fn mc_series(
    exp: &Experiment,
    grid: &[usize],
    trials: usize,
    seed: &SeedSpec,
) -> Result<Vec<Estimate>> {
    grid.iter().map(|&n| mc_mean(exp, n, trials, seed)).collect()
}

/// Default size grid for rate experiments.
pub fn default_grid(functional: Functional) -> Vec<usize> {
    match functional {
        Functional::Mst => vec![128, 256, 512, 1024, 2048],
        Functional::Mm => vec![64, 128, 256, 512],
        // tours are exact only at tiny sizes and stay out of rate fits
        Functional::Tsp => vec![4, 6, 8, 10, 12],
    }
}

/// Outcome of a one-sided statistical claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }

    /// `Pass` iff `ok`.
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Fail dominates, then inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}
