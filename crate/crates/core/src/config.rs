//! Experiment configuration files.
//!
//! The format is flat `key = value` lines grouped under optional `[section]`
//! headers; `#` starts a comment. Keys before the first header apply to
//! every section, and a section's own keys override them.
//!
//! ```text
//! seed = 7
//! trials = 400
//!
//! [mst_rates]
//! functional = mst
//! p = 1
//! n_grid = 128 256 512 1024 2048
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::estimator::{default_grid, Experiment};
use crate::sampling::{BlockDensity, HolderDensity, Sampler};
use crate::solvers::tsp::TSP_DP_MAX;
use crate::solvers::{Functional, Limits, Mode, Variant};

/// Parsed file: section name (empty for the preamble) to its keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut file = ConfigFile::default();
        let mut current = String::new();
        file.sections.entry(current.clone()).or_default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err("unterminated section header"))?;
                current = name.trim().to_string();
                if current.is_empty() {
                    return Err(err("empty section name"));
                }
                file.sections.entry(current.clone()).or_default();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected `key = value`"))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(err("empty key"));
            }
            file.sections
                .get_mut(&current)
                .unwrap()
                .insert(key.to_string(), v.trim().to_string());
        }
        Ok(file)
    }

    /// Preamble keys overlaid with those of `section`.
    pub fn merged(&self, section: Option<&str>) -> Result<BTreeMap<String, String>> {
        let mut keys = self.sections.get("").cloned().unwrap_or_default();
        if let Some(name) = section {
            let own = self
                .sections
                .get(name)
                .ok_or_else(|| Error::config(format!("no section `[{name}]`")))?;
            keys.extend(own.iter().map(|(k, v)| (k.clone(), v.clone())));
        }
        Ok(keys)
    }
}

/// Everything needed to run one experiment reproducibly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub functional: Functional,
    pub variant: Variant,
    pub d: usize,
    pub p: f64,
    pub sampler: Sampler,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub mode: Mode,
    pub limits: Limits,
    pub factor: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            functional: Functional::Mst,
            variant: Variant::Plain,
            d: 2,
            p: 1.0,
            sampler: Sampler::Uniform,
            n_grid: default_grid(Functional::Mst),
            trials: 400,
            seed: None,
            output: None,
            mode: Mode::Exact,
            limits: Limits::default(),
            factor: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(format!("`{key}`: cannot parse `{v}`")))
}

/// `holder(a=<real>)` or `block(m=<int>, w=<w1> <w2> ...)`.
pub fn parse_density(spec: &str, d: usize) -> Result<Sampler> {
    let spec = spec.trim();
    let bad = || Error::config(format!("unrecognized density `{spec}`"));
    let (name, args) = spec
        .strip_suffix(')')
        .and_then(|s| s.split_once('('))
        .ok_or_else(bad)?;
    let mut kv = BTreeMap::new();
    for part in args.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(bad)?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    match name.trim() {
        "holder" => {
            let a: f64 = parse_num("a", kv.get("a").ok_or_else(bad)?)?;
            Ok(Sampler::Holder(HolderDensity::affine(a, d)?))
        }
        "block" => {
            let m: usize = parse_num("m", kv.get("m").ok_or_else(bad)?)?;
            let weights = kv
                .get("w")
                .ok_or_else(bad)?
                .split_whitespace()
                .map(|w| parse_num("w", w))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Sampler::Block(BlockDensity::new(m, d, weights)?))
        }
        _ => Err(bad()),
    }
}

/// Inverse of [`parse_density`] for densities; plain names otherwise.
pub fn sampler_spec(s: &Sampler) -> String {
    match s {
        Sampler::Uniform => "uniform".into(),
        Sampler::Poisson => "poisson".into(),
        Sampler::Holder(HolderDensity::Affine { slope, .. }) => format!("holder(a={slope})"),
        Sampler::Block(phi) => {
            let w: Vec<String> = phi.weights().iter().map(|w| w.to_string()).collect();
            format!("block(m={}, w={})", phi.level(), w.join(" "))
        }
    }
}

impl ExperimentConfig {
    /// Builds a config from defaults and the given keys.
    pub fn from_keys(keys: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        // dimension and functional first: other keys depend on them
        for key in ["d", "functional"] {
            if let Some(v) = keys.get(key) {
                cfg.set(key, v)?;
            }
        }
        if !keys.contains_key("n_grid") {
            cfg.n_grid = default_grid(cfg.functional);
        }
        for (k, v) in keys {
            if k != "d" && k != "functional" {
                cfg.set(k, v)?;
            }
        }
        Ok(cfg)
    }

    pub fn from_text(text: &str, section: Option<&str>) -> Result<Self> {
        Self::from_keys(&ConfigFile::parse(text)?.merged(section)?)
    }

    /// Sets one key; command-line flags go through here too.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "functional" => self.functional = value.parse().map_err(as_config)?,
            "variant" => self.variant = value.parse().map_err(as_config)?,
            "d" => {
                self.d = parse_num(key, value)?;
                if self.d == 0 {
                    return Err(Error::config("`d` must be at least 1"));
                }
            }
            "p" => self.p = parse_num(key, value)?,
            "sampler" | "density" => {
                self.sampler = match value.trim() {
                    "uniform" => Sampler::Uniform,
                    "poisson" => Sampler::Poisson,
                    other => parse_density(other, self.d)?,
                }
            }
            "n_grid" => {
                self.n_grid = value
                    .split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_num(key, s))
                    .collect::<Result<_>>()?
            }
            "trials" => self.trials = parse_num(key, value)?,
            "seed" => self.seed = Some(parse_num(key, value)?),
            "output" => self.output = Some(PathBuf::from(value.trim())),
            "mode" => self.mode = value.parse().map_err(as_config)?,
            "mm_exact_limit" => self.limits.mm_exact = parse_num(key, value)?,
            "tsp_exact_limit" => self.limits.tsp_exact = parse_num(key, value)?,
            "tsp_star_exact_limit" => self.limits.tsp_star_exact = parse_num(key, value)?,
            "boundary_factor" => self.factor = Some(parse_num(key, value)?),
            other => return Err(Error::config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Serializes every key; [`ExperimentConfig::from_text`] reads it back
    /// to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("functional", self.functional.name().into());
        kv("variant", self.variant.name().into());
        kv("d", self.d.to_string());
        kv("p", self.p.to_string());
        kv("sampler", sampler_spec(&self.sampler));
        let grid: Vec<String> = self.n_grid.iter().map(|n| n.to_string()).collect();
        kv("n_grid", grid.join(" "));
        kv("trials", self.trials.to_string());
        if let Some(seed) = self.seed {
            kv("seed", seed.to_string());
        }
        if let Some(out) = &self.output {
            kv("output", out.display().to_string());
        }
        kv("mode", self.mode.name().into());
        kv("mm_exact_limit", self.limits.mm_exact.to_string());
        kv("tsp_exact_limit", self.limits.tsp_exact.to_string());
        kv("tsp_star_exact_limit", self.limits.tsp_star_exact.to_string());
        if let Some(f) = self.factor {
            kv("boundary_factor", f.to_string());
        }
        s
    }

    /// Checks that the grid fits the exact solvers unless heuristics were
    /// asked for, and that the seed is present when `need_seed`.
    pub fn validate(&self, need_seed: bool) -> Result<()> {
        if need_seed && self.seed.is_none() {
            return Err(Error::config("`seed` is required for reproducible experiments"));
        }
        if self.trials < 2 {
            return Err(Error::config("`trials` must be at least 2"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::config("`n_grid` is empty"));
        }
        if self.limits.tsp_exact > TSP_DP_MAX || self.limits.tsp_star_exact > TSP_DP_MAX {
            return Err(Error::config(format!(
                "tour limits above {TSP_DP_MAX} are not supported"
            )));
        }
        if self.mode == Mode::Exact {
            let limit = match (self.functional, self.variant) {
                (Functional::Mst, _) => usize::MAX,
                (Functional::Mm, _) => self.limits.mm_exact,
                (Functional::Tsp, Variant::Plain) => self.limits.tsp_exact,
                (Functional::Tsp, Variant::Dual) => self.limits.tsp_star_exact,
            };
            // Poisson samples overshoot the nominal size
            let slack = |n: usize| match self.sampler {
                Sampler::Poisson => n + 6 * (n as f64).sqrt().ceil() as usize,
                _ => n,
            };
            if let Some(&n) = self.n_grid.iter().find(|&&n| slack(n) > limit) {
                return Err(Error::config(format!(
                    "n={n} exceeds the exact {} limit of {limit}; set `mode = heuristic`",
                    self.functional
                )));
            }
        }
        Ok(())
    }

    pub fn experiment(&self) -> Result<Experiment> {
        Ok(Experiment::new(self.functional, self.p, self.d)?
            .with_variant(self.variant)
            .with_sampler(self.sampler.clone())
            .with_mode(self.mode)
            .with_factor(self.factor)
            .with_limits(self.limits))
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Usage(m) => Error::Config(m),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = "\
# shared
seed = 7
trials = 50

[mst]
functional = mst
p = 0.5
n_grid = 128, 256 512

[block]
density = block(m=2, w=2 0.6666666666666667 0.6666666666666666 0.6666666666666667)
";

    #[test]
    fn sections_overlay_the_preamble() {
        let cfg = ExperimentConfig::from_text(TEXT, Some("mst")).unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.trials, 50);
        assert_eq!(cfg.p, 0.5);
        assert_eq!(cfg.n_grid, vec![128, 256, 512]);
        assert!(ExperimentConfig::from_text(TEXT, Some("nope")).is_err());
    }

    #[test]
    fn round_trip() {
        for section in ["mst", "block"] {
            let mut cfg = ExperimentConfig::from_text(TEXT, Some(section)).unwrap();
            cfg.factor = Some(0.5);
            cfg.output = Some("out/x.csv".into());
            let again = ExperimentConfig::from_text(&cfg.to_text(), None).unwrap();
            assert_eq!(cfg, again);
        }
        let mut cfg = ExperimentConfig::default();
        cfg.set("density", "holder(a=-1.25)").unwrap();
        assert_eq!(ExperimentConfig::from_text(&cfg.to_text(), None).unwrap(), cfg);
    }

    #[test]
    fn errors() {
        assert!(matches!(ConfigFile::parse("x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ConfigFile::parse("a = 1\n[b"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(
            ExperimentConfig::from_text("color = red", None),
            Err(Error::Config(_))
        ));
        let cfg = ExperimentConfig::default();
        assert!(matches!(cfg.validate(true), Err(Error::Config(_))));
        let mut cfg = ExperimentConfig::from_text("functional = tsp\nseed = 1", None).unwrap();
        cfg.n_grid = vec![32];
        assert!(cfg.validate(true).is_err());
        cfg.mode = Mode::Heuristic;
        assert!(cfg.validate(true).is_ok());
    }
}
