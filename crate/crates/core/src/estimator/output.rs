//! CSV, key-value reports and SVG plots.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::fit::{RateFit, SlopeFit};
use super::{DensityReport, Estimate, GapSeries};

pub const ESTIMATE_HEADER: &str = "functional,variant,d,p,sampler,n,trials,mean,stderr,seed";
pub const GAP_HEADER: &str = "gap,functional,d,p,n,k,trials,mean,stderr,min,seed";

fn csv_error(e: csv::Error) -> Error {
    Error::Parse {
        line: e.position().map_or(0, |p| p.line() as usize),
        msg: e.to_string(),
    }
}

/// One CSV row per estimate, with a header.
pub fn estimates_csv(estimates: &[Estimate]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for e in estimates {
        w.serialize(e).map_err(csv_error)?;
    }
    if estimates.is_empty() {
        return Ok(format!("{ESTIMATE_HEADER}\n"));
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_estimates_csv(text: &str) -> Result<Vec<Estimate>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

pub fn gaps_csv(series: &[GapSeries]) -> String {
    let mut out = format!("{GAP_HEADER}\n");
    for s in series {
        for g in &s.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                s.kind, s.functional, s.d, s.p, g.n, g.k, s.trials, g.mean, g.stderr, g.min, s.seed
            )
            .unwrap();
        }
    }
    out
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers see either nothing or the complete file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Key-value block describing a growth-constant fit and its residual slope.
pub fn rate_report(fit: &RateFit, residual: &RateFit) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
    kv("model", fit.model.name().into());
    kv("alpha_hat", fit.alpha_hat.to_string());
    kv("alpha_stderr", fit.alpha_stderr.to_string());
    kv("c_hat", fit.c_hat.to_string());
    kv("exponent", fit.exponent_hat.to_string());
    kv("residual_rms", fit.residual_rms.to_string());
    kv("n_grid", join(&fit.n_grid));
    kv("residual_model", residual.model.name().into());
    kv("residual_slope", residual.exponent_hat.to_string());
    kv("residual_slope_stderr", residual.exponent_stderr.to_string());
    kv("residual_status", residual.status.name().into());
    kv("residual_excluded", join(&residual.excluded));
    out
}

pub fn slope_lines(name: &str, fit: &SlopeFit) -> String {
    format!(
        "{name}_slope = {}\n{name}_slope_stderr = {}\n{name}_status = {}\n{name}_used = {}\n{name}_excluded = {}\n",
        fit.slope,
        fit.slope_stderr,
        fit.status.name(),
        join(&fit.used),
        join(&fit.excluded)
    )
}

pub fn density_report_text(r: &DensityReport) -> String {
    let mut out = String::from("n,level,normalized,target,gap,gap_stderr,l1_gap,l1_bound\n");
    for q in &r.points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            q.n,
            q.level,
            q.normalized,
            q.target,
            q.gap,
            q.gap_stderr,
            q.l1_gap.map_or(String::new(), |v| v.to_string()),
            q.l1_bound.map_or(String::new(), |v| v.to_string()),
        )
        .unwrap();
    }
    out.push_str(&slope_lines("gap", &r.slope));
    writeln!(out, "bound_exponent = {}", r.regime_exponent).unwrap();
    writeln!(out, "allowance = {}", r.allowance).unwrap();
    writeln!(out, "shrinks = {}", r.shrinks).unwrap();
    writeln!(out, "verdict = {}", r.verdict.name()).unwrap();
    out
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Self-contained log-log plot of `points` with an optional fitted curve.
pub fn svg_loglog(title: &str, points: &[(f64, f64)], curve: Option<&[(f64, f64)]>) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    let all: Vec<(f64, f64)> = points
        .iter()
        .chain(curve.unwrap_or(&[]).iter())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in &all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |lo: f64, hi: f64| {
        let span = (hi - lo).max(1e-9);
        (lo - 0.05 * span, hi + 0.05 * span)
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    let sx = |x: f64| M + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * M);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<path d="M{M} {M} V{} H{}" fill="none" stroke="black"/>"#,
        H - M,
        W - M
    )
    .unwrap();
    // decade ticks
    for k in x0.ceil() as i32..=x1.floor() as i32 {
        let x = sx(10f64.powi(k));
        writeln!(
            s,
            r#"<text x="{x:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">1e{k}</text>"#,
            H - M + 16.0
        )
        .unwrap();
    }
    for k in y0.ceil() as i32..=y1.floor() as i32 {
        let y = sy(10f64.powi(k));
        writeln!(
            s,
            r#"<text x="{}" y="{y:.1}" text-anchor="end" font-family="sans-serif" font-size="11">1e{k}</text>"#,
            M - 6.0
        )
        .unwrap();
    }
    if let Some(c) = curve {
        let d: Vec<String> = c
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, sx(x), sy(y)))
            .collect();
        writeln!(s, r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#, d.join(" ")).unwrap();
    }
    for &(x, y) in points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0) {
        writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="firebrick"/>"#, sx(x), sy(y)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
