//! Weighted least-squares fits of the growth constant and of log-log slopes.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solvers::PowerParams;

use super::Estimate;

/// Points whose magnitude is below this many standard errors are treated as
/// noise in slope fits.
pub const NOISE_SIGMAS: f64 = 3.0;

const CRITICAL_TOL: f64 = 1e-12;

/// Which correction term accompanies `n^{(d-p)/d}` in the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `0 < p < d-1`: correction `n^{(d-1-p)/d}`.
    Subcritical,
    /// `p = d-1 != 1`: correction `log n`.
    CriticalLog,
    /// `p = d-1 = 1`: bounded correction.
    CriticalUnit,
    /// `d-1 < p < d`: bounded correction.
    Supercritical,
}

impl Regime {
    pub fn of(params: &PowerParams) -> Result<Regime> {
        let (p, d) = (params.p, params.d as f64);
        if params.d < 2 || !(p < d) {
            return Err(Error::config(format!(
                "rate regimes need d >= 2 and 0 < p < d, got d={} p={p}",
                params.d
            )));
        }
        Ok(if (p - (d - 1.0)).abs() < CRITICAL_TOL {
            if (p - 1.0).abs() < CRITICAL_TOL {
                Regime::CriticalUnit
            } else {
                Regime::CriticalLog
            }
        } else if p < d - 1.0 {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Subcritical => "0<p<d-1",
            Regime::CriticalLog => "p=d-1!=1",
            Regime::CriticalUnit => "p=d-1=1",
            Regime::Supercritical => "d-1<p<d",
        }
    }

    /// Power of `n` in the upper bound on `EL(U_n) - alpha n^{(d-p)/d}`; the
    /// log case counts as 0.
    pub fn correction_exponent(self, params: &PowerParams) -> f64 {
        match self {
            Regime::Subcritical => (params.d as f64 - 1.0 - params.p) / params.d as f64,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModel {
    AlphaPlusCorrection,
    PurePower,
    PowerWithLog,
}

impl RateModel {
    pub fn name(self) -> &'static str {
        match self {
            RateModel::AlphaPlusCorrection => "alpha_plus_correction",
            RateModel::PurePower => "pure_power",
            RateModel::PowerWithLog => "power_with_log",
        }
    }
}

/// How much a slope fit can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeStatus {
    /// At least three points stand clear of the noise.
    Resolved,
    /// Too few resolved points; the slope is that of `|value| + 3 stderr`,
    /// which only supports upper-bound claims.
    Envelope,
    Inconclusive,
}

impl SlopeStatus {
    pub fn name(self) -> &'static str {
        match self {
            SlopeStatus::Resolved => "resolved",
            SlopeStatus::Envelope => "envelope",
            SlopeStatus::Inconclusive => "inconclusive",
        }
    }
}

/// Fitted `log |value| = intercept + slope log n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub status: SlopeStatus,
    /// Grid sizes that entered the fit.
    pub used: Vec<usize>,
    /// Grid sizes dropped as noise-dominated.
    pub excluded: Vec<usize>,
}

impl SlopeFit {
    fn inconclusive(excluded: Vec<usize>) -> Self {
        SlopeFit {
            slope: f64::NAN,
            slope_stderr: f64::NAN,
            intercept: f64::NAN,
            status: SlopeStatus::Inconclusive,
            used: Vec::new(),
            excluded,
        }
    }
}

impl fmt::Display for SlopeFit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "slope={:.4} slope_stderr={:.4} status={} used={:?} excluded={:?}",
            self.slope,
            self.slope_stderr,
            self.status.name(),
            self.used,
            self.excluded
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub model: RateModel,
    pub alpha_hat: f64,
    pub alpha_stderr: f64,
    /// Coefficient of the leading correction term.
    pub c_hat: f64,
    pub exponent_hat: f64,
    pub exponent_stderr: f64,
    pub residual_rms: f64,
    pub n_grid: Vec<usize>,
    pub status: SlopeStatus,
    pub excluded: Vec<usize>,
}

/// Result of a weighted linear least-squares solve.
struct Wls {
    coef: Vec<f64>,
    cov: DMatrix<f64>,
    residuals: Vec<f64>,
}

/// Minimizes `sum w_i (y_i - x_i . b)^2`. With `weights = None` the
/// covariance is scaled by the residual variance.
fn wls(rows: &[Vec<f64>], y: &[f64], weights: Option<&[f64]>) -> Result<Wls> {
    let k = rows.len();
    let m = rows[0].len();
    if k < m {
        return Err(Error::config(format!(
            "{k} grid points cannot determine {m} coefficients"
        )));
    }
    let x = DMatrix::from_fn(k, m, |i, j| rows[i][j]);
    let w = DVector::from_fn(k, |i, _| weights.map_or(1.0, |w| w[i]));
    // scale columns to unit norm so the conditioning test is meaningful
    let scale: Vec<f64> = (0..m)
        .map(|j| x.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    let xs = DMatrix::from_fn(k, m, |i, j| x[(i, j)] / scale[j] * w[i].sqrt());
    let ys = DVector::from_fn(k, |i, _| y[i] * w[i].sqrt());
    let svd = xs.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (lo, hi) = (sv.min(), sv.max());
    if !(hi > 0.0) || lo / hi < 1e-10 {
        return Err(Error::config(
            "singular design: the size grid is too narrow for this model",
        ));
    }
    let bs = svd
        .solve(&ys, 0.0)
        .map_err(|e| Error::config(format!("least squares failed: {e}")))?;
    let coef: Vec<f64> = (0..m).map(|j| bs[j] / scale[j]).collect();
    let residuals: Vec<f64> = (0..k)
        .map(|i| y[i] - (0..m).map(|j| x[(i, j)] * coef[j]).sum::<f64>())
        .collect();
    let normal = xs.transpose() * &xs;
    let inv = normal
        .try_inverse()
        .ok_or_else(|| Error::config("singular normal matrix"))?;
    let mut cov = DMatrix::from_fn(m, m, |i, j| inv[(i, j)] / (scale[i] * scale[j]));
    if weights.is_none() {
        let dof = k - m;
        let s2 = if dof > 0 {
            residuals.iter().map(|r| r * r).sum::<f64>() / dof as f64
        } else {
            0.0
        };
        cov *= s2;
    }
    Ok(Wls {
        coef,
        cov,
        residuals,
    })
}

fn check_grid(series: &[Estimate]) -> Result<Vec<usize>> {
    let grid: Vec<usize> = series.iter().map(|e| e.n).collect();
    if grid.len() < 4 {
        return Err(Error::config(format!(
            "rate fits need at least 4 grid sizes, got {}",
            grid.len()
        )));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("grid sizes must be strictly increasing"));
    }
    Ok(grid)
}

/// Weights `stderr^-2`, or `None` when some point has no noise estimate.
fn inverse_variance(stderr: impl Iterator<Item = f64>) -> Option<Vec<f64>> {
    let w: Vec<f64> = stderr.map(|s| 1.0 / (s * s)).collect();
    w.iter().all(|w| w.is_finite()).then_some(w)
}

/// Fits `mean_n = alpha n^{(d-p)/d} + correction + const` by weighted least
/// squares, with the correction term chosen by the regime of `(d, p)`.
pub fn fit_alpha(series: &[Estimate], params: &PowerParams) -> Result<RateFit> {
    let grid = check_grid(series)?;
    let regime = Regime::of(params)?;
    let e = params.growth_exponent();
    let (model, rows): (RateModel, Vec<Vec<f64>>) = match regime {
        Regime::Subcritical => {
            let c = regime.correction_exponent(params);
            (
                RateModel::AlphaPlusCorrection,
                grid.iter()
                    .map(|&n| {
                        let n = n as f64;
                        vec![n.powf(e), n.powf(c), 1.0]
                    })
                    .collect(),
            )
        }
        Regime::CriticalLog => (
            RateModel::PowerWithLog,
            grid.iter()
                .map(|&n| {
                    let n = n as f64;
                    vec![n.powf(e), n.ln(), 1.0]
                })
                .collect(),
        ),
        Regime::CriticalUnit | Regime::Supercritical => (
            RateModel::AlphaPlusCorrection,
            grid.iter().map(|&n| vec![(n as f64).powf(e), 1.0]).collect(),
        ),
    };
    let y: Vec<f64> = series.iter().map(|s| s.mean).collect();
    let weights = inverse_variance(series.iter().map(|s| s.stderr));
    let fit = wls(&rows, &y, weights.as_deref())?;
    let rms = (fit.residuals.iter().map(|r| r * r).sum::<f64>() / y.len() as f64).sqrt();
    Ok(RateFit {
        model,
        alpha_hat: fit.coef[0],
        alpha_stderr: fit.cov[(0, 0)].max(0.0).sqrt(),
        c_hat: fit.coef[1],
        exponent_hat: e,
        exponent_stderr: 0.0,
        residual_rms: rms,
        n_grid: grid,
        status: SlopeStatus::Resolved,
        excluded: Vec::new(),
    })
}

/// Fits `log value` against `log n` over the points `(n, value, stderr)`
/// whose `|value|` is at least [`NOISE_SIGMAS`] standard errors. Fewer than
/// three such points leave the slope inconclusive.
pub fn log_slope(points: &[(usize, f64, f64)]) -> SlopeFit {
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    for &(n, value, se) in points {
        let mag = value.abs();
        if mag > 0.0 && mag.is_finite() && !(mag < NOISE_SIGMAS * se) {
            used.push(n);
            rows.push(vec![1.0, (n as f64).ln()]);
            y.push(mag.ln());
            // delta method: sd(log v) = se / v
            w.push(if se > 0.0 { (mag / se).powi(2) } else { f64::INFINITY });
        } else {
            excluded.push(n);
        }
    }
    if used.len() < 3 {
        return SlopeFit::inconclusive(excluded);
    }
    let weights = w.iter().all(|w| w.is_finite()).then_some(w.as_slice());
    match wls(&rows, &y, weights) {
        Ok(fit) => SlopeFit {
            slope: fit.coef[1],
            slope_stderr: fit.cov[(1, 1)].max(0.0).sqrt(),
            intercept: fit.coef[0],
            status: SlopeStatus::Resolved,
            used,
            excluded,
        },
        Err(_) => SlopeFit::inconclusive(excluded),
    }
}

/// Unweighted log-log slope of `|value| + 3 stderr` over all points. An upper
/// envelope of the true magnitude, used when [`log_slope`] cannot resolve
/// a quantity that is only claimed to be bounded above.
pub fn envelope_slope(points: &[(usize, f64, f64)]) -> SlopeFit {
    let rows: Vec<Vec<f64>> = points.iter().map(|&(n, _, _)| vec![1.0, (n as f64).ln()]).collect();
    let y: Vec<f64> = points
        .iter()
        .map(|&(_, v, se)| (v.abs() + NOISE_SIGMAS * se).ln())
        .collect();
    if points.len() < 3 || y.iter().any(|v| !v.is_finite()) {
        return SlopeFit::inconclusive(points.iter().map(|p| p.0).collect());
    }
    match wls(&rows, &y, None) {
        Ok(fit) => SlopeFit {
            slope: fit.coef[1],
            slope_stderr: fit.cov[(1, 1)].max(0.0).sqrt(),
            intercept: fit.coef[0],
            status: SlopeStatus::Envelope,
            used: points.iter().map(|p| p.0).collect(),
            excluded: Vec::new(),
        },
        Err(_) => SlopeFit::inconclusive(points.iter().map(|p| p.0).collect()),
    }
}

/// Slope for an upper-bound claim: resolved when possible, else the envelope.
pub fn upper_slope(points: &[(usize, f64, f64)]) -> SlopeFit {
    let fit = log_slope(points);
    if fit.status == SlopeStatus::Resolved {
        fit
    } else {
        envelope_slope(points)
    }
}

/// Log-log slope of `|mean_n - alpha_hat n^{(d-p)/d}|`.
pub fn residual_rate(series: &[Estimate], alpha_hat: f64, params: &PowerParams) -> Result<RateFit> {
    let grid = check_grid(series)?;
    let e = params.growth_exponent();
    let points: Vec<(usize, f64, f64)> = series
        .iter()
        .map(|s| (s.n, s.mean - alpha_hat * (s.n as f64).powf(e), s.stderr))
        .collect();
    let fit = log_slope(&points);
    let rms = (points.iter().map(|p| p.1 * p.1).sum::<f64>() / points.len() as f64).sqrt();
    Ok(RateFit {
        model: RateModel::PurePower,
        alpha_hat,
        alpha_stderr: f64::NAN,
        c_hat: fit.intercept.exp(),
        exponent_hat: fit.slope,
        exponent_stderr: fit.slope_stderr,
        residual_rms: rms,
        n_grid: grid,
        status: fit.status,
        excluded: fit.excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{Functional, Variant};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn synthetic(grid: &[usize], mut f: impl FnMut(f64) -> f64, se: f64) -> Vec<Estimate> {
        grid.iter()
            .map(|&n| Estimate {
                functional: Functional::Mst,
                variant: Variant::Plain,
                d: 2,
                p: 1.0,
                sampler: "synthetic".into(),
                n,
                trials: 100,
                mean: f(n as f64),
                stderr: se,
                seed: 0,
            })
            .collect()
    }

    const GRID: [usize; 5] = [128, 256, 512, 1024, 2048];

    #[test]
    fn noiseless_fit_recovers_coefficients() {
        let params = PowerParams::new(1.0, 2).unwrap();
        let s = synthetic(&GRID, |n| 2.0 * n.sqrt() + 3.0, 0.0);
        let fit = fit_alpha(&s, &params).unwrap();
        assert!((fit.alpha_hat - 2.0).abs() < 1e-9);
        assert!((fit.c_hat - 3.0).abs() < 1e-9);

        // three-term model at d=3, p=1
        let params = PowerParams::new(1.0, 3).unwrap();
        let s = synthetic(&GRID, |n| 0.7 * n.powf(2.0 / 3.0) - 0.4 * n.powf(1.0 / 3.0) + 1.5, 0.0);
        let fit = fit_alpha(&s, &params).unwrap();
        assert!((fit.alpha_hat - 0.7).abs() < 1e-9);
        assert!((fit.c_hat + 0.4).abs() < 1e-9);

        // log model at d=3, p=2
        let params = PowerParams::new(2.0, 3).unwrap();
        let s = synthetic(&GRID, |n| 0.5 * n.powf(1.0 / 3.0) + 0.2 * n.ln() - 1.0, 0.0);
        let fit = fit_alpha(&s, &params).unwrap();
        assert_eq!(fit.model, RateModel::PowerWithLog);
        assert!((fit.alpha_hat - 0.5).abs() < 1e-9);
    }

    #[test]
    fn noisy_fit_covers_truth() {
        let params = PowerParams::new(1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut hits = 0;
        for _ in 0..200 {
            let s = synthetic(
                &GRID,
                |n| 2.0 * n.sqrt() + 3.0 + 0.01 * (rng.gen::<f64>() - 0.5) * 12f64.sqrt(),
                0.01,
            );
            let fit = fit_alpha(&s, &params).unwrap();
            if (fit.alpha_hat - 2.0).abs() < 5.0 * fit.alpha_stderr {
                hits += 1;
            }
        }
        assert_eq!(hits, 200);
    }

    #[test]
    fn narrow_or_short_grids_are_config_errors() {
        let params = PowerParams::new(1.0, 2).unwrap();
        let s = synthetic(&[128, 256, 512], |n| n.sqrt(), 0.1);
        assert!(matches!(fit_alpha(&s, &params), Err(Error::Config(_))));
        let s = synthetic(&[128, 128, 128, 128], |n| n.sqrt(), 0.1);
        assert!(matches!(fit_alpha(&s, &params), Err(Error::Config(_))));
    }

    #[test]
    fn residual_slopes_of_constructed_signals() {
        let params = PowerParams::new(1.0, 2).unwrap();
        let s = synthetic(&GRID, |n| 2.0 * n.sqrt() + 5.0 * n.powf(0.25), 0.0);
        let r = residual_rate(&s, 2.0, &params).unwrap();
        assert!((r.exponent_hat - 0.25).abs() < 0.02);
        let s = synthetic(&GRID, |n| 2.0 * n.sqrt() + 3.0, 0.0);
        let r = residual_rate(&s, 2.0, &params).unwrap();
        assert!(r.exponent_hat.abs() < 0.02);
    }

    #[test]
    fn noise_dominated_residuals_are_inconclusive() {
        let params = PowerParams::new(1.0, 2).unwrap();
        let s = synthetic(&GRID, |n| 2.0 * n.sqrt() + 0.01, 0.1);
        let r = residual_rate(&s, 2.0, &params).unwrap();
        assert_eq!(r.status, SlopeStatus::Inconclusive);
        assert_eq!(r.excluded.len(), 5);
        let pts: Vec<_> = GRID.iter().map(|&n| (n, 0.01, 0.1)).collect();
        let env = upper_slope(&pts);
        assert_eq!(env.status, SlopeStatus::Envelope);
        assert!(env.slope.abs() < 1e-12);
    }

    #[test]
    fn regimes() {
        let r = |p, d| Regime::of(&PowerParams::new(p, d).unwrap()).unwrap();
        assert_eq!(r(1.0, 2), Regime::CriticalUnit);
        assert_eq!(r(0.5, 2), Regime::Subcritical);
        assert_eq!(r(1.5, 2), Regime::Supercritical);
        assert_eq!(r(1.0, 3), Regime::Subcritical);
        assert_eq!(r(2.0, 3), Regime::CriticalLog);
        assert!(Regime::of(&PowerParams::new(2.0, 2).unwrap()).is_err());
    }
}
