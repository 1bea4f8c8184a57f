//! Random point generation on `[0,1]^d`: uniform, Poissonized, block-density
//! and affine Hölder-density samples, plus block approximation of a Hölder
//! density and the density integrals used by the non-uniform experiments.
//!
//! Every sampler draws from a [`ChaCha8Rng`] obtained from a [`SeedSpec`].
//! A uniform (or Hölder) point consumes exactly `d` draws, so a sample of
//! `n + k` points from a stream extends the sample of `n` points from the
//! same stream. The paired experiments rely on that.

use std::fmt::Write as _;
use std::io::Read;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use crate::error::{Error, Result};
use crate::geometry::PointSet;

/// Tolerance on the total mass of a block density.
pub const MASS_TOL: f64 = 1e-9;

const TAG_POINTS: u64 = 0x5054_5354; // "PTST"
const TAG_COUNT: u64 = 0x434e_5421; // "CNT!"

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Root of all randomness in an experiment.
///
/// The stream for `(n, trial)` is a ChaCha8 generator seeded with
/// `h(h(h(h(seed) ^ n) ^ trial) ^ tag)` where `h` is [`splitmix64`] and `tag`
/// separates the point stream from the Poisson count stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub experiment_seed: u64,
}

impl SeedSpec {
    pub fn new(experiment_seed: u64) -> Self {
        SeedSpec { experiment_seed }
    }

    pub fn mix(&self, n: u64, trial: u64, tag: u64) -> u64 {
        let h = splitmix64(self.experiment_seed);
        let h = splitmix64(h ^ n);
        let h = splitmix64(h ^ trial);
        splitmix64(h ^ tag)
    }

    /// Point stream for `(n, trial)`.
    pub fn points_rng(&self, n: u64, trial: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.mix(n, trial, TAG_POINTS))
    }

    /// Independent stream used only for Poisson counts.
    pub fn count_rng(&self, n: u64, trial: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.mix(n, trial, TAG_COUNT))
    }
}

/// `n` i.i.d. uniform points in `[0,1]^d`.
pub fn sample_uniform<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> PointSet {
    let coords = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
    PointSet::from_flat(dim, coords).expect("uniform coordinates are finite")
}

/// A Poisson(`mean`) count.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<usize> {
    let dist = Poisson::new(mean)
        .map_err(|e| Error::usage(format!("invalid Poisson intensity {mean}: {e}")))?;
    let k: f64 = dist.sample(rng);
    Ok(k as usize)
}

/// Homogeneous Poisson process of the given intensity on `[0,1]^d`: a
/// Poisson count drawn from `count_rng`, then that many uniform points from
/// `points_rng`.
pub fn sample_poisson<R: Rng + ?Sized, S: Rng + ?Sized>(
    intensity: f64,
    dim: usize,
    count_rng: &mut R,
    points_rng: &mut S,
) -> Result<PointSet> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::usage(format!(
            "Poisson intensity must be positive, got {intensity}"
        )));
    }
    let n = poisson_count(intensity, count_rng)?;
    Ok(sample_uniform(n, dim, points_rng))
}

/// Piecewise-constant density on the partition of `[0,1]^d` into `m^d`
/// subcubes of side `1/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensity {
    level: usize,
    dim: usize,
    weights: Vec<f64>,
}

impl BlockDensity {
    pub fn new(level: usize, dim: usize, weights: Vec<f64>) -> Result<Self> {
        if level == 0 || dim == 0 {
            return Err(Error::usage("block density needs level and dimension >= 1"));
        }
        let cells = level
            .checked_pow(dim as u32)
            .ok_or_else(|| Error::usage("block density has too many cells"))?;
        if weights.len() != cells {
            return Err(Error::usage(format!(
                "level {level} in dimension {dim} needs {cells} weights, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::usage("block weights must be finite and nonnegative"));
        }
        let mass: f64 = weights.iter().sum::<f64>() / cells as f64;
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::usage(format!(
                "block weights integrate to {mass}, not 1"
            )));
        }
        Ok(BlockDensity { level, dim, weights })
    }

    pub fn uniform(level: usize, dim: usize) -> Self {
        BlockDensity {
            level,
            dim,
            weights: vec![1.0; level.pow(dim as u32)],
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell_volume(&self) -> f64 {
        (self.level as f64).powi(-(self.dim as i32))
    }

    /// Cell probabilities `phi_i m^{-d}`.
    pub fn cell_probabilities(&self) -> Vec<f64> {
        let v = self.cell_volume();
        self.weights.iter().map(|w| w * v).collect()
    }

    /// Lower corner of cell `idx` (row-major, last axis fastest).
    pub fn cell_corner(&self, mut idx: usize) -> Vec<f64> {
        let h = 1.0 / self.level as f64;
        let mut corner = vec![0.0; self.dim];
        for k in (0..self.dim).rev() {
            corner[k] = (idx % self.level) as f64 * h;
            idx /= self.level;
        }
        corner
    }

    /// Text form: `m d` then one weight per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.level, self.dim);
        for w in &self.weights {
            let _ = writeln!(out, "{w}");
        }
        out
    }

    pub fn read_text<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        let mut tokens = text.split_whitespace();
        let mut next_usize = |what: &str| -> Result<usize> {
            let tok = tokens.next().ok_or(Error::Parse {
                line: 1,
                msg: format!("missing {what}"),
            })?;
            tok.parse().map_err(|e| Error::Parse {
                line: 1,
                msg: format!("bad {what} `{tok}`: {e}"),
            })
        };
        let level = next_usize("level")?;
        let dim = next_usize("dimension")?;
        let weights = tokens
            .map(|t| {
                t.parse::<f64>().map_err(|e| Error::Parse {
                    line: 0,
                    msg: format!("bad weight `{t}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        BlockDensity::new(level, dim, weights)
    }
}

/// `n` i.i.d. points with a block density: a cell chosen with probability
/// `phi_i m^{-d}`, then a uniform point inside it.
pub fn sample_block<R: Rng + ?Sized>(n: usize, phi: &BlockDensity, rng: &mut R) -> PointSet {
    let cells = WeightedIndex::new(phi.cell_probabilities())
        .expect("validated block density has positive mass");
    let h = 1.0 / phi.level as f64;
    let mut ps = PointSet::empty(phi.dim);
    let mut x = vec![0.0; phi.dim];
    for _ in 0..n {
        let corner = phi.cell_corner(cells.sample(rng));
        for (xk, ck) in x.iter_mut().zip(&corner) {
            *xk = ck + h * rng.gen::<f64>();
        }
        ps.push(&x);
    }
    ps
}

/// Densities of a Hölder class used by the non-uniform experiments.
///
/// The only built-in family is `f_a(x) = 1 + a (x_1 - 1/2)` on `[0,1]^d`,
/// `|a| <= 2`. It is Lipschitz with constant `|a|`, so it lies in the class
/// with smoothness 1 and constant `|a|`, and all of its integrals over
/// subcubes have closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HolderDensity {
    Affine { slope: f64, dim: usize },
}

impl HolderDensity {
    pub fn affine(slope: f64, dim: usize) -> Result<Self> {
        if !(slope.abs() <= 2.0) {
            return Err(Error::usage(format!(
                "affine density slope must satisfy |a| <= 2, got {slope}"
            )));
        }
        if dim == 0 {
            return Err(Error::usage("dimension must be at least 1"));
        }
        Ok(HolderDensity::Affine { slope, dim })
    }

    pub fn dim(&self) -> usize {
        match *self {
            HolderDensity::Affine { dim, .. } => dim,
        }
    }

    pub fn smoothness(&self) -> f64 {
        1.0
    }

    pub fn holder_constant(&self) -> f64 {
        match *self {
            HolderDensity::Affine { slope, .. } => slope.abs(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            HolderDensity::Affine { slope, .. } => 1.0 + slope * (x[0] - 0.5),
        }
    }

    /// Inverse CDF of the first-coordinate marginal.
    fn inverse_marginal(&self, u: f64) -> f64 {
        match *self {
            HolderDensity::Affine { slope, .. } => {
                // root of (a/2) x^2 + (1 - a/2) x = u, rationalized so a = 0 is exact
                let b = 1.0 - 0.5 * slope;
                let disc = (b * b + 2.0 * slope * u).max(0.0);
                let denom = b + disc.sqrt();
                if denom == 0.0 {
                    0.0
                } else {
                    (2.0 * u / denom).clamp(0.0, 1.0)
                }
            }
        }
    }

    /// Bound on `int |f - phi|` for the level-`m` block approximation.
    pub fn block_gap_bound(&self, m: usize) -> f64 {
        let beta = self.smoothness();
        (self.dim() as f64).powf(beta / 2.0) * self.holder_constant() * (m as f64).powf(-beta)
    }
}

/// `n` i.i.d. points from a Hölder density, by inversion in the first
/// coordinate. Each point consumes `d` draws.
pub fn sample_holder<R: Rng + ?Sized>(n: usize, f: &HolderDensity, rng: &mut R) -> PointSet {
    let d = f.dim();
    let mut ps = sample_uniform(n, d, rng);
    let mut coords = ps.as_flat().to_vec();
    for row in coords.chunks_exact_mut(d) {
        row[0] = f.inverse_marginal(row[0]);
    }
    ps = PointSet::from_flat(d, coords).expect("transformed coordinates are finite");
    ps
}

/// Level-`m` block density with `phi_i = m^d * int_{Q_i} f`.
pub fn approximate_block(f: &HolderDensity, m: usize) -> Result<BlockDensity> {
    if m == 0 {
        return Err(Error::usage("block level must be at least 1"));
    }
    let d = f.dim();
    let cells = m.pow(d as u32);
    let h = 1.0 / m as f64;
    let template = BlockDensity::uniform(m, d);
    let weights = (0..cells)
        .map(|i| {
            // affine integrand: cell mean is the value at the cell center
            let center: Vec<f64> = template.cell_corner(i).iter().map(|c| c + 0.5 * h).collect();
            f.eval(&center)
        })
        .collect();
    Ok(BlockDensity {
        level: m,
        dim: d,
        weights,
    })
}

/// `int_l^u |c0 + c1 x| dx`.
fn abs_linear_integral(c0: f64, c1: f64, l: f64, u: f64) -> f64 {
    let prim = |x: f64| c0 * x + 0.5 * c1 * x * x;
    let signed = |a: f64, b: f64| (prim(b) - prim(a)).abs();
    if c1 != 0.0 {
        let root = -c0 / c1;
        if root > l && root < u {
            return signed(l, root) + signed(root, u);
        }
    }
    signed(l, u)
}

/// `int_{[0,1]^d} |f - phi|`, in closed form cell by cell.
pub fn l1_gap(f: &HolderDensity, phi: &BlockDensity) -> Result<f64> {
    if f.dim() != phi.dim {
        return Err(Error::usage(format!(
            "density dimensions differ: {} vs {}",
            f.dim(),
            phi.dim
        )));
    }
    let HolderDensity::Affine { slope, .. } = *f;
    let h = 1.0 / phi.level as f64;
    // each cell is an x_1-interval times a (d-1)-cube of volume h^{d-1}
    let cross_section = h.powi(phi.dim as i32 - 1);
    let total = phi
        .weights
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let l = phi.cell_corner(i)[0];
            // f - w = (1 - a/2 - w) + a x_1
            abs_linear_integral(1.0 - 0.5 * slope - w, slope, l, l + h) * cross_section
        })
        .sum();
    Ok(total)
}

/// A density on `[0,1]^d` whose power integral can be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Block(BlockDensity),
    Holder(HolderDensity),
}

/// `int_{[0,1]^d} density^q`, for `0 < q <= 1`.
pub fn density_power_integral(density: &Density, q: f64) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::usage(format!("exponent must lie in (0, 1], got {q}")));
    }
    Ok(match density {
        Density::Block(phi) => {
            phi.weights.iter().map(|w| w.powf(q)).sum::<f64>() * phi.cell_volume()
        }
        Density::Holder(HolderDensity::Affine { slope, .. }) => {
            let a = *slope;
            if a.abs() < 1e-12 {
                1.0
            } else {
                let hi = (1.0 + 0.5 * a).max(0.0).powf(q + 1.0);
                let lo = (1.0 - 0.5 * a).max(0.0).powf(q + 1.0);
                (hi - lo) / (a * (q + 1.0))
            }
        }
    })
}

/// How an experiment draws its points.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampler {
    Uniform,
    /// Poisson process with intensity equal to the nominal `n`.
    Poisson,
    Block(BlockDensity),
    Holder(HolderDensity),
}

impl Sampler {
    pub fn name(&self) -> String {
        match self {
            Sampler::Uniform => "uniform".into(),
            Sampler::Poisson => "poisson".into(),
            Sampler::Block(phi) => format!("block(m={})", phi.level),
            Sampler::Holder(HolderDensity::Affine { slope, .. }) => format!("holder(a={slope})"),
        }
    }

    /// The sample for `(n, trial)` under `seed`.
    pub fn draw(&self, n: usize, dim: usize, seed: &SeedSpec, trial: u64) -> Result<PointSet> {
        let mut rng = seed.points_rng(n as u64, trial);
        match self {
            Sampler::Uniform => Ok(sample_uniform(n, dim, &mut rng)),
            Sampler::Poisson => {
                let mut count = seed.count_rng(n as u64, trial);
                sample_poisson(n as f64, dim, &mut count, &mut rng)
            }
            Sampler::Block(phi) => {
                check_dim(phi.dim, dim)?;
                Ok(sample_block(n, phi, &mut rng))
            }
            Sampler::Holder(f) => {
                check_dim(f.dim(), dim)?;
                Ok(sample_holder(n, f, &mut rng))
            }
        }
    }
}

fn check_dim(density: usize, requested: usize) -> Result<()> {
    if density != requested {
        return Err(Error::usage(format!(
            "density is {density}-dimensional but the experiment uses d={requested}"
        )));
    }
    Ok(())
}
