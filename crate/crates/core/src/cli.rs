//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 usage or
//! configuration error, 3 a requested assertion could not be resolved from
//! the data (only `rates` and `gaps`).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::audit::{run_check, Axiom};
use crate::boundary::boundary_diagnostics;
use crate::config::{ConfigFile, ExperimentConfig};
use crate::error::{Error, Result};
use crate::estimator::fit::upper_slope;
use crate::estimator::output::{
    estimates_csv, gaps_csv, rate_report, read_estimates_csv, slope_lines, svg_loglog, write_atomic,
    GAP_HEADER,
};
use crate::estimator::{
    boundary_growth, closeness_gap, fit_alpha, log_slope, mc_series, perturbation_gaps,
    poissonization_gap, residual_rate, Estimate, GapSeries, SlopeFit, SlopeStatus, Verdict,
};
use crate::geometry::PointSet;
use crate::sampling::{approximate_block, l1_gap, HolderDensity, Sampler, SeedSpec};
use crate::solvers::{Functional, Instance, Limits, Mode, PowerParams, Variant, BOUNDARY};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "subadditive", version, about = "Power-weighted Euclidean functionals and their rate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance read from a point-set file.
    Solve(SolveArgs),
    /// Randomized checks of the functional axioms.
    Axioms(AxiomArgs),
    /// Monte Carlo means over a size grid, as CSV.
    Estimate(ExpArgs),
    /// Fit the limit constant and the residual decay.
    Rates(RatesArgs),
    /// Paired gap experiments.
    Gaps(GapsArgs),
    /// Block approximation error of an affine density.
    DensityApprox(DensityArgs),
    /// Summarize estimate and gap CSV files.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    functional: Functional,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value = "plain")]
    variant: Variant,
    #[arg(long, default_value = "exact")]
    mode: Mode,
    /// Point-set file, `-` for stdin.
    #[arg(long = "in")]
    input: PathBuf,
    /// Also print the edge list.
    #[arg(long)]
    edges: bool,
    /// Boundary cost factor for duals (1 or 0.5).
    #[arg(long)]
    factor: Option<f64>,
}

#[derive(Args, Debug)]
struct AxiomArgs {
    /// Checks per axiom, functional and power.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 1.5])]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    functional: Vec<Functional>,
    #[arg(long, value_delimiter = ',')]
    axiom: Vec<Axiom>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

/// Experiment flags; each overrides the matching config key.
#[derive(Args, Debug, Default)]
struct ExpArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Config section to read on top of the preamble.
    #[arg(long)]
    section: Option<String>,
    #[arg(long)]
    functional: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    p: Option<String>,
    /// uniform, poisson, holder(a=..) or block(m=.., w=..)
    #[arg(long, alias = "density")]
    sampler: Option<String>,
    /// Comma-separated sizes.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    factor: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct RatesArgs {
    #[command(flatten)]
    exp: ExpArgs,
    /// Write the estimates here as well.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Log-log SVG of the means with the fitted leading term.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Fail when the residual log-slope exceeds this.
    #[arg(long)]
    max_residual_slope: Option<f64>,
    /// Fail when dropping the largest size moves alpha by 2 combined stderr.
    #[arg(long)]
    check_stability: bool,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum GapChoice {
    Closeness,
    Perturbation,
    Poissonization,
    Boundary,
}

#[derive(Args, Debug)]
struct GapsArgs {
    #[arg(long, value_enum)]
    kind: GapChoice,
    #[command(flatten)]
    exp: ExpArgs,
    /// Base size for perturbation gaps.
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-2i64, -1, 0, 1, 2])]
    offsets: Vec<i64>,
    /// Fail when the gap (or boundary cost) log-slope exceeds this.
    #[arg(long)]
    max_slope: Option<f64>,
}

#[derive(Args, Debug)]
struct DensityArgs {
    /// Slope of `1 + a (x_1 - 1/2)`, |a| <= 2.
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Hölder constant; defaults to |a|.
    #[arg(long = "K")]
    k: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8, 16])]
    m: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    d: usize,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Estimate or gap CSV files.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    // subcommands buffer their output so it can cross into the thread pool
    let mut buf = Vec::new();
    let result = dispatch(cli.command, &mut buf);
    let _ = out.write_all(&buf);
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cmd: Command, out: &mut Vec<u8>) -> Result<i32> {
    match cmd {
        Command::Solve(a) => solve(a, out),
        Command::Axioms(a) => {
            let threads = a.threads;
            with_threads(threads, || axioms(a, out))
        }
        Command::Estimate(a) => {
            let threads = a.threads;
            with_threads(threads, || estimate(a, out))
        }
        Command::Rates(a) => {
            let threads = a.exp.threads;
            with_threads(threads, || rates(a, out))
        }
        Command::Gaps(a) => {
            let threads = a.exp.threads;
            with_threads(threads, || gaps(a, out))
        }
        Command::DensityApprox(a) => density_approx(a, out),
        Command::Report(a) => report(a, out),
    }
}

fn with_threads<F: FnOnce() -> Result<i32> + Send>(threads: usize, f: F) -> Result<i32> {
    if threads == 0 {
        return Err(Error::usage("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::usage(format!("thread pool: {e}")))?
        .install(f)
}

/// Writes to `path` atomically, or to `out` when there is no path.
fn emit(path: Option<&Path>, text: &str, out: &mut Vec<u8>) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn solve(a: SolveArgs, out: &mut Vec<u8>) -> Result<i32> {
    let points = if a.input.as_os_str() == "-" {
        PointSet::read_text(std::io::stdin().lock())?
    } else {
        PointSet::read_text(BufReader::new(std::fs::File::open(&a.input)?))?
    };
    let sol = Instance::new(points, a.p, a.functional)?
        .with_variant(a.variant)
        .with_mode(a.mode)
        .with_factor(a.factor)
        .with_limits(Limits::default())
        .solve()?;
    let mut s = format!("value = {:?}\ncertified = {}\n", sol.value, sol.certified);
    if a.variant == Variant::Dual {
        let (nb, lb) = boundary_diagnostics(&sol)?;
        writeln!(s, "N_B={nb} L_B={lb:?}").unwrap();
    }
    if a.edges {
        s.push_str("edges:\n");
        let name = |i: usize| if i == BOUNDARY { "B".to_string() } else { i.to_string() };
        for &(i, j) in &sol.edges {
            writeln!(s, "{} {}", name(i), name(j)).unwrap();
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(EXIT_OK)
}

fn axioms(a: AxiomArgs, out: &mut Vec<u8>) -> Result<i32> {
    let axioms = if a.axiom.is_empty() { Axiom::ALL.to_vec() } else { a.axiom.clone() };
    let functionals = if a.functional.is_empty() { Functional::ALL.to_vec() } else { a.functional.clone() };
    let mut failed = 0;
    let mut total = 0;
    for &axiom in &axioms {
        let mut axiom_ok = true;
        for &f in &functionals {
            for &p in &a.p {
                let r = run_check(axiom, f, p, a.d, a.trials, a.seed)?;
                writeln!(out, "{r}")?;
                axiom_ok &= r.passed();
                total += 1;
                failed += !r.passed() as usize;
            }
        }
        writeln!(out, "{} axiom {}", if axiom_ok { "PASS" } else { "FAIL" }, axiom.name())?;
    }
    writeln!(out, "{} of {total} groups passed", total - failed)?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAIL })
}

/// Config file, then flags, then validation.
fn load_config(a: &ExpArgs) -> Result<ExperimentConfig> {
    let mut keys = match &a.config {
        Some(path) => ConfigFile::parse(&std::fs::read_to_string(path)?)?.merged(a.section.as_deref())?,
        None if a.section.is_some() => return Err(Error::usage("--section needs --config")),
        None => BTreeMap::new(),
    };
    let flags = [
        ("functional", &a.functional),
        ("variant", &a.variant),
        ("d", &a.d),
        ("p", &a.p),
        ("sampler", &a.sampler),
        ("n_grid", &a.grid),
        ("trials", &a.trials),
        ("seed", &a.seed),
        ("mode", &a.mode),
        ("boundary_factor", &a.factor),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            if k == "sampler" {
                keys.remove("density");
            }
            keys.insert(k.to_string(), v.clone());
        }
    }
    if let Some(o) = &a.out {
        keys.insert("output".into(), o.display().to_string());
    }
    ExperimentConfig::from_keys(&keys)
}

fn estimate(a: ExpArgs, out: &mut Vec<u8>) -> Result<i32> {
    let cfg = load_config(&a)?;
    cfg.validate(true)?;
    let seed = SeedSpec::new(cfg.seed.unwrap());
    let series = mc_series(&cfg.experiment()?, &cfg.n_grid, cfg.trials, &seed)?;
    emit(cfg.output.as_deref(), &estimates_csv(&series)?, out)?;
    Ok(EXIT_OK)
}

fn rates(a: RatesArgs, out: &mut Vec<u8>) -> Result<i32> {
    let cfg = load_config(&a.exp)?;
    cfg.validate(true)?;
    let params = PowerParams::new(cfg.p, cfg.d)?;
    let seed = SeedSpec::new(cfg.seed.unwrap());
    let series = mc_series(&cfg.experiment()?, &cfg.n_grid, cfg.trials, &seed)?;
    let fit = fit_alpha(&series, &params)?;
    let residual = residual_rate(&series, fit.alpha_hat, &params)?;
    let mut text = rate_report(&fit, &residual);
    let mut verdict = Verdict::Pass;

    if series.len() >= 5 {
        let trunc = fit_alpha(&series[..series.len() - 1], &params)?;
        let shift = (fit.alpha_hat - trunc.alpha_hat).abs();
        let combined = fit.alpha_stderr.hypot(trunc.alpha_stderr);
        let stable = shift < 2.0 * combined;
        writeln!(text, "alpha_truncated = {}", trunc.alpha_hat).unwrap();
        writeln!(text, "alpha_shift_over_stderr = {}", shift / combined).unwrap();
        writeln!(text, "stable = {stable}").unwrap();
        if a.check_stability {
            verdict = verdict.and(Verdict::from_bool(stable));
        }
    } else if a.check_stability {
        writeln!(text, "stable = unknown (needs 5 grid sizes)").unwrap();
        verdict = verdict.and(Verdict::Inconclusive);
    }
    if let Some(max) = a.max_residual_slope {
        let v = match residual.status {
            SlopeStatus::Inconclusive => Verdict::Inconclusive,
            _ => Verdict::from_bool(residual.exponent_hat <= max),
        };
        writeln!(text, "residual_slope_max = {max}").unwrap();
        verdict = verdict.and(v);
    }
    writeln!(text, "verdict = {}", verdict.name()).unwrap();

    if let Some(path) = &a.csv {
        write_atomic(path, estimates_csv(&series)?.as_bytes())?;
    }
    if let Some(path) = &a.plot {
        let e = params.growth_exponent();
        let pts: Vec<(f64, f64)> = series.iter().map(|s| (s.n as f64, s.mean)).collect();
        let curve: Vec<(f64, f64)> = series
            .iter()
            .map(|s| (s.n as f64, fit.alpha_hat * (s.n as f64).powf(e)))
            .collect();
        let title = format!("{} d={} p={}: alpha_hat={:.4}", cfg.functional, cfg.d, cfg.p, fit.alpha_hat);
        write_atomic(path, svg_loglog(&title, &pts, Some(&curve)).as_bytes())?;
    }
    emit(cfg.output.as_deref(), &text, out)?;
    Ok(verdict_code(verdict))
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Upper-bound slope claim: inconclusive when even the envelope fails.
fn slope_verdict(fit: &SlopeFit, max: f64) -> Verdict {
    match fit.status {
        SlopeStatus::Inconclusive => Verdict::Inconclusive,
        _ => Verdict::from_bool(fit.slope <= max),
    }
}

fn gaps(a: GapsArgs, out: &mut Vec<u8>) -> Result<i32> {
    let mut cfg = load_config(&a.exp)?;
    if cfg.sampler != Sampler::Uniform {
        return Err(Error::usage("gap experiments draw uniform samples"));
    }
    if a.kind == GapChoice::Perturbation {
        cfg.n_grid = vec![a.n + a.offsets.iter().copied().max().unwrap_or(0).max(0) as usize];
    }
    cfg.validate(true)?;
    if matches!(a.kind, GapChoice::Closeness | GapChoice::Boundary) {
        let mut dual = cfg.clone();
        dual.variant = Variant::Dual;
        dual.validate(true)?;
    }
    let seed = SeedSpec::new(cfg.seed.unwrap());
    let exp = cfg.experiment()?;
    let mut summary = String::new();
    let mut verdict = Verdict::Pass;
    let series: Vec<GapSeries> = match a.kind {
        GapChoice::Closeness => {
            let s = closeness_gap(&exp, &cfg.n_grid, cfg.trials, &seed)?;
            let nonneg = s.points.iter().all(|g| g.min >= -1e-9);
            writeln!(summary, "pointwise_nonnegative = {nonneg}").unwrap();
            verdict = verdict.and(Verdict::from_bool(nonneg));
            let fit = upper_slope(&s.triples());
            summary.push_str(&slope_lines("gap", &fit));
            if let Some(max) = a.max_slope {
                verdict = verdict.and(slope_verdict(&fit, max));
            }
            vec![s]
        }
        GapChoice::Poissonization => {
            let s = poissonization_gap(&exp, &cfg.n_grid, cfg.trials, &seed)?;
            let fit = upper_slope(&s.triples());
            summary.push_str(&slope_lines("gap", &fit));
            if let Some(max) = a.max_slope {
                verdict = verdict.and(slope_verdict(&fit, max));
            }
            vec![s]
        }
        GapChoice::Perturbation => {
            let s = perturbation_gaps(&exp, a.n, &a.offsets, cfg.trials, &seed)?;
            let zero_ok = s.points.iter().filter(|g| g.k == 0).all(|g| g.mean == 0.0 && g.stderr == 0.0);
            writeln!(summary, "zero_offset_exact = {zero_ok}").unwrap();
            verdict = verdict.and(Verdict::from_bool(zero_ok));
            vec![s]
        }
        GapChoice::Boundary => {
            let (count, cost) = boundary_growth(&exp, &cfg.n_grid, cfg.trials, &seed)?;
            let upper = &count.points[count.points.len() / 2..];
            let ratios: Vec<f64> = upper.iter().map(|g| g.mean / (g.n as f64).sqrt()).collect();
            let spread = ratios.iter().cloned().fold(f64::MIN, f64::max)
                / ratios.iter().cloned().fold(f64::MAX, f64::min);
            writeln!(summary, "count_over_sqrt_n_spread = {spread}").unwrap();
            summary.push_str(&slope_lines("count", &log_slope(&count.triples())));
            let fit = upper_slope(&cost.triples());
            summary.push_str(&slope_lines("cost", &fit));
            verdict = verdict.and(Verdict::from_bool(spread <= 2.0));
            if let Some(max) = a.max_slope {
                verdict = verdict.and(slope_verdict(&fit, max));
            }
            vec![count, cost]
        }
    };
    writeln!(summary, "verdict = {}", verdict.name()).unwrap();
    let csv = gaps_csv(&series);
    match cfg.output.as_deref() {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            out.write_all(summary.as_bytes())?;
        }
        None => {
            out.write_all(csv.as_bytes())?;
            out.write_all(summary.as_bytes())?;
        }
    }
    Ok(verdict_code(verdict))
}

fn density_approx(a: DensityArgs, out: &mut Vec<u8>) -> Result<i32> {
    if !(a.beta > 0.0 && a.beta <= 1.0) {
        return Err(Error::usage("--beta must lie in (0, 1]"));
    }
    let f = HolderDensity::affine(a.a, a.d)?;
    // a Lipschitz constant |a| gives a beta-Hölder constant |a| sqrt(d)^(1-beta)
    let min_k = a.a.abs() * (a.d as f64).powf((1.0 - a.beta) / 2.0);
    let k = a.k.unwrap_or(min_k);
    if k < min_k * (1.0 - 1e-12) {
        return Err(Error::usage(format!(
            "--K {k} is below the density's Hölder-{} constant {min_k}",
            a.beta
        )));
    }
    let mut all_ok = true;
    for &m in &a.m {
        let gap = l1_gap(&f, &approximate_block(&f, m)?)?;
        let bound = (a.d as f64).powf(a.beta / 2.0) * k * (m as f64).powf(-a.beta);
        let ok = gap <= bound + 1e-12;
        all_ok &= ok;
        writeln!(out, "m={m} gap={gap} bound={bound} {}", if ok { "ok" } else { "VIOLATED" })?;
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_FAIL })
}

#[derive(Debug, Deserialize)]
struct GapRow {
    gap: String,
    functional: String,
    d: usize,
    p: f64,
    n: usize,
    k: i64,
    trials: usize,
    mean: f64,
    stderr: f64,
}

fn report(a: ReportArgs, out: &mut Vec<u8>) -> Result<i32> {
    let mut text = String::new();
    for path in &a.files {
        let body = std::fs::read_to_string(path)?;
        writeln!(text, "# {}", path.display()).unwrap();
        if body.starts_with(GAP_HEADER) {
            report_gaps(&body, &mut text)?;
        } else {
            report_estimates(&read_estimates_csv(&body)?, &mut text)?;
        }
    }
    emit(a.out.as_deref(), &text, out)?;
    Ok(EXIT_OK)
}

fn report_estimates(rows: &[Estimate], text: &mut String) -> Result<()> {
    let mut groups: BTreeMap<String, Vec<Estimate>> = BTreeMap::new();
    for e in rows {
        let key = format!("{} {} d={} p={} sampler={}", e.functional, e.variant.name(), e.d, e.p, e.sampler);
        groups.entry(key).or_default().push(e.clone());
    }
    for (key, mut series) in groups {
        series.sort_by_key(|e| e.n);
        writeln!(text, "[{key}]").unwrap();
        for e in &series {
            writeln!(text, "n={} mean={} stderr={} trials={}", e.n, e.mean, e.stderr, e.trials).unwrap();
        }
        let params = PowerParams::new(series[0].p, series[0].d);
        if let (Ok(params), true) = (params, series.len() >= 4 && series[0].sampler == "uniform") {
            match fit_alpha(&series, &params) {
                Ok(fit) => writeln!(text, "alpha_hat = {} +- {}", fit.alpha_hat, fit.alpha_stderr).unwrap(),
                Err(e) => writeln!(text, "alpha_hat = n/a ({e})").unwrap(),
            }
        }
    }
    Ok(())
}

fn report_gaps(body: &str, text: &mut String) -> Result<()> {
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let mut groups: BTreeMap<String, Vec<GapRow>> = BTreeMap::new();
    for row in r.deserialize::<GapRow>() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let key = format!("{} {} d={} p={}", row.gap, row.functional, row.d, row.p);
        groups.entry(key).or_default().push(row);
    }
    for (key, rows) in groups {
        writeln!(text, "[{key}]").unwrap();
        for g in &rows {
            writeln!(text, "n={} k={} mean={} stderr={} trials={}", g.n, g.k, g.mean, g.stderr, g.trials).unwrap();
        }
        let triples: Vec<(usize, f64, f64)> = rows.iter().filter(|g| g.k == 0).map(|g| (g.n, g.mean, g.stderr)).collect();
        if triples.len() >= 3 {
            text.push_str(&slope_lines("gap", &upper_slope(&triples)));
        }
    }
    Ok(())
}
