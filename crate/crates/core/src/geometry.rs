//! Points, cubes, power-weighted edge costs and the affine maps used by the
//! scaling axiom.
//!
//! A [`PointSet`] keeps its coordinates in one flat row-major buffer; solvers
//! work on `&[f64]` slices borrowed from it.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Slack allowed when checking that a point lies inside a cube.
pub const INSIDE_TOL: f64 = 1e-12;

/// A point in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::usage("point must have at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::usage("point coordinates must be finite"));
        }
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

/// The axis-parallel cube `prod_i [corner_i, corner_i + side]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    corner: Point,
    side: f64,
}

impl Cube {
    pub fn new(corner: Point, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::usage(format!("cube side must be positive, got {side}")));
        }
        Ok(Cube { corner, side })
    }

    /// `[0,1]^d`.
    pub fn unit(dim: usize) -> Self {
        Cube {
            corner: Point::origin(dim),
            side: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.corner.dim()
    }

    pub fn corner(&self) -> &[f64] {
        self.corner.coords()
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.corner()).all(|(&xi, &ci)| {
                xi >= ci - INSIDE_TOL && xi <= ci + self.side + INSIDE_TOL
            })
    }

    /// Distance from an interior point to the nearest face, without the
    /// containment check.
    pub(crate) fn face_dist_unchecked(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for (&xi, &ci) in x.iter().zip(self.corner()) {
            let lo = xi - ci;
            let hi = ci + self.side - xi;
            best = best.min(lo).min(hi);
        }
        best.max(0.0)
    }

    /// The image of this cube under `x -> y + t x`.
    pub fn affine_image(&self, shift: &Point, scale: f64) -> Result<Cube> {
        check_scale(scale)?;
        check_dims(self.dim(), shift.dim())?;
        let corner = shift
            .coords()
            .iter()
            .zip(self.corner())
            .map(|(y, c)| y + scale * c)
            .collect();
        Cube::new(Point(corner), scale * self.side)
    }

    /// Splits the cube into `m^d` subcubes of side `side/m`, in row-major
    /// order (last coordinate varies fastest).
    pub fn subcubes(&self, m: usize) -> Vec<Cube> {
        let d = self.dim();
        let h = self.side / m as f64;
        let total = m.pow(d as u32);
        (0..total)
            .map(|mut idx| {
                let mut corner = vec![0.0; d];
                for k in (0..d).rev() {
                    corner[k] = self.corner()[k] + (idx % m) as f64 * h;
                    idx /= m;
                }
                Cube {
                    corner: Point(corner),
                    side: h,
                }
            })
            .collect()
    }

    /// Row-major index of the subcube (of an `m`-partition) containing `x`.
    /// Points on a shared face go to the upper cell, except on the cube's
    /// upper faces.
    pub fn cell_index(&self, x: &[f64], m: usize) -> usize {
        let mut idx = 0;
        for (&xi, &ci) in x.iter().zip(self.corner()) {
            let rel = (xi - ci) / self.side * m as f64;
            let k = (rel.floor().max(0.0) as usize).min(m - 1);
            idx = idx * m + k;
        }
        idx
    }
}

/// An ordered multiset of points sharing one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn empty(dim: usize) -> Self {
        PointSet {
            dim,
            coords: Vec::new(),
        }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("dimension must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::usage(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::usage("point coordinates must be finite"));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[Point]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            check_dims(dim, p.dim())?;
            coords.extend_from_slice(p.coords());
        }
        PointSet::from_flat(dim, coords)
    }

    /// Convenience constructor for literal point lists.
    pub fn from_rows<const D: usize>(rows: &[[f64; D]]) -> Self {
        let coords = rows.iter().flat_map(|r| r.iter().copied()).collect();
        PointSet::from_flat(D, coords).expect("literal rows are well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(x);
    }

    /// The first `k` points, in order.
    pub fn prefix(&self, k: usize) -> PointSet {
        PointSet {
            dim: self.dim,
            coords: self.coords[..k * self.dim].to_vec(),
        }
    }

    /// The points with the given indices, in the given order.
    pub fn select(&self, idx: &[usize]) -> PointSet {
        let mut out = PointSet::empty(self.dim);
        for &i in idx {
            out.push(self.point(i));
        }
        out
    }

    /// Points falling in each cell of an `m`-partition of `cube`, in
    /// row-major cell order.
    pub fn split_by_cells(&self, cube: &Cube, m: usize) -> Vec<PointSet> {
        let mut parts = vec![PointSet::empty(self.dim); m.pow(self.dim as u32)];
        for x in self.iter() {
            parts[cube.cell_index(x, m)].push(x);
        }
        parts
    }

    /// Parses the text format: a `d n` header followed by `n` lines of `d`
    /// whitespace-separated coordinates.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| l.map(|s| (i + 1, s)))
            .filter(|r| !matches!(r, Ok((_, s)) if s.trim().is_empty()));
        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing `d n` header".into(),
        })??;
        let nums: Vec<&str> = header.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `d n`, got `{header}`"),
            });
        }
        let parse_usize = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad count `{s}`: {e}"),
            })
        };
        let dim = parse_usize(nums[0])?;
        let n = parse_usize(nums[1])?;
        if dim == 0 {
            return Err(Error::Parse {
                line,
                msg: "dimension must be at least 1".into(),
            });
        }
        let mut coords = Vec::with_capacity(n * dim);
        for _ in 0..n {
            let (line, text) = lines.next().ok_or(Error::Parse {
                line: line + 1,
                msg: format!("expected {n} points"),
            })??;
            let row: Vec<f64> = text
                .split_whitespace()
                .map(|s| {
                    s.parse::<f64>().map_err(|e| Error::Parse {
                        line,
                        msg: format!("bad coordinate `{s}`: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != dim {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {dim} coordinates, got {}", row.len()),
                });
            }
            coords.extend(row);
        }
        if let Some(extra) = lines.next() {
            let (line, _) = extra?;
            return Err(Error::Parse {
                line,
                msg: "trailing data after the declared points".into(),
            });
        }
        PointSet::from_flat(dim, coords)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.dim, self.len());
        for x in self.iter() {
            let row: Vec<String> = x.iter().map(|c| format!("{c}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::usage(format!(
            "dimension mismatch: expected {expected}, got {got}"
        )));
    }
    Ok(())
}

fn check_scale(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::usage(format!("scale factor must be positive, got {t}")));
    }
    Ok(())
}

/// Euclidean distance raised to `p`, without argument checks.
#[inline]
pub(crate) fn dist_pow(a: &[f64], b: &[f64], p: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    pow_of_sq(sq, p)
}

/// `sqrt(sq)^p`, with exact shortcuts for the common powers.
#[inline]
pub(crate) fn pow_of_sq(sq: f64, p: f64) -> f64 {
    if sq == 0.0 {
        0.0
    } else if p == 2.0 {
        sq
    } else if p == 1.0 {
        sq.sqrt()
    } else {
        sq.powf(0.5 * p)
    }
}

/// `|a - b|^p`.
pub fn edge_cost(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    if !(p > 0.0) {
        return Err(Error::usage(format!("power must be positive, got {p}")));
    }
    Ok(dist_pow(a, b, p))
}

/// Distance from `a` to the nearest face of `cube`.
pub fn boundary_dist(a: &[f64], cube: &Cube) -> Result<f64> {
    check_dims(cube.dim(), a.len())?;
    if !cube.contains(a) {
        return Err(Error::usage(format!("point {a:?} lies outside the cube")));
    }
    Ok(cube.face_dist_unchecked(a))
}

/// Maps every point `x` to `y + t x`, preserving order.
pub fn affine_image(ps: &PointSet, shift: &Point, scale: f64) -> Result<PointSet> {
    check_scale(scale)?;
    check_dims(ps.dim(), shift.dim())?;
    let d = ps.dim();
    let coords = ps
        .as_flat()
        .iter()
        .enumerate()
        .map(|(i, &c)| shift.0[i % d] + scale * c)
        .collect();
    PointSet::from_flat(d, coords)
}

fn coord_key(x: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same location.
    x.iter().map(|&c| (c + 0.0).to_bits()).collect()
}

/// Size of the multiset symmetric difference of two point sets.
pub fn sym_diff_count(a: &PointSet, b: &PointSet) -> Result<usize> {
    if !a.is_empty() && !b.is_empty() {
        check_dims(a.dim(), b.dim())?;
    }
    let mut balance: HashMap<Vec<u64>, i64> = HashMap::new();
    for x in a.iter() {
        *balance.entry(coord_key(x)).or_default() += 1;
    }
    for x in b.iter() {
        *balance.entry(coord_key(x)).or_default() -= 1;
    }
    Ok(balance.values().map(|v| v.unsigned_abs() as usize).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-9;

    #[test]
    fn edge_cost_examples() {
        assert!((edge_cost(&[0.0, 0.0], &[0.0, 1.0], 2.0).unwrap() - 1.0).abs() < TOL);
        assert_eq!(edge_cost(&[0.3, 0.7], &[0.3, 0.7], 0.37).unwrap(), 0.0);
        let v = edge_cost(&[0.0, 0.0], &[3.0, 4.0], 0.5).unwrap();
        assert!((v - 2.236_067_977_5).abs() < TOL);
    }

    #[test]
    fn edge_cost_rejects_bad_input() {
        assert!(matches!(edge_cost(&[0.0], &[0.0, 1.0], 1.0), Err(Error::Usage(_))));
        assert!(edge_cost(&[0.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn boundary_dist_examples() {
        let sq = Cube::unit(2);
        assert!((boundary_dist(&[0.5, 0.02], &sq).unwrap() - 0.02).abs() < TOL);
        assert!((boundary_dist(&[0.5, 0.5], &sq).unwrap() - 0.5).abs() < TOL);
        let cube = Cube::unit(3);
        assert!((boundary_dist(&[0.1, 0.4, 0.7], &cube).unwrap() - 0.1).abs() < TOL);
    }

    #[test]
    fn boundary_dist_outside_is_usage_error() {
        assert!(boundary_dist(&[1.5, 0.5], &Cube::unit(2)).is_err());
        // within tolerance counts as inside
        assert_eq!(boundary_dist(&[1.0 + 1e-13, 0.5], &Cube::unit(2)).unwrap(), 0.0);
    }

    #[test]
    fn affine_image_examples() {
        let ps = PointSet::from_rows(&[[0.0, 0.0], [1.0, 1.0]]);
        assert_eq!(affine_image(&ps, &Point::origin(2), 1.0).unwrap(), ps);

        let ps = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0]]);
        let out = affine_image(&ps, &Point(vec![2.0, 2.0]), 0.5).unwrap();
        assert_eq!(out, PointSet::from_rows(&[[2.0, 2.0], [2.5, 2.0]]));

        assert!(affine_image(&ps, &Point::origin(2), 0.0).is_err());
        assert!(affine_image(&ps, &Point::origin(2), -1.0).is_err());
    }

    #[test]
    fn sym_diff_examples() {
        let a = PointSet::from_rows(&[[0.0, 0.0]]);
        assert_eq!(sym_diff_count(&a, &a.clone()).unwrap(), 0);
        let a = PointSet::from_rows(&[[0.0, 0.0], [1.0, 1.0]]);
        let b = PointSet::from_rows(&[[1.0, 1.0]]);
        assert_eq!(sym_diff_count(&a, &b).unwrap(), 1);
        let a = PointSet::from_rows(&[[0.1, 0.1], [0.2, 0.2], [0.3, 0.3]]);
        let b = PointSet::from_rows(&[[0.4, 0.1], [0.5, 0.2], [0.6, 0.3], [0.7, 0.0]]);
        assert_eq!(sym_diff_count(&a, &b).unwrap(), 7);
        assert_eq!(sym_diff_count(&a, &PointSet::empty(2)).unwrap(), 3);
    }

    #[test]
    fn sym_diff_counts_multiplicity() {
        let a = PointSet::from_rows(&[[0.5, 0.5], [0.5, 0.5]]);
        let b = PointSet::from_rows(&[[0.5, 0.5]]);
        assert_eq!(sym_diff_count(&a, &b).unwrap(), 1);
    }

    #[test]
    fn text_format_round_trip() {
        let ps = PointSet::from_rows(&[[0.125, 0.3], [1.0 / 3.0, 0.0]]);
        let text = ps.to_text();
        assert!(text.starts_with("2 2\n"));
        let back = PointSet::read_text(text.as_bytes()).unwrap();
        assert_eq!(back, ps);
    }

    #[test]
    fn text_format_errors() {
        assert!(PointSet::read_text("2 2\n0 0\n".as_bytes()).is_err());
        assert!(PointSet::read_text("2 1\n0 0 0\n".as_bytes()).is_err());
        assert!(PointSet::read_text("2 1\n0 x\n".as_bytes()).is_err());
        assert!(PointSet::read_text("".as_bytes()).is_err());
        let empty = PointSet::read_text("3 0\n".as_bytes()).unwrap();
        assert_eq!((empty.dim(), empty.len()), (3, 0));
    }

    #[test]
    fn subcubes_partition_in_row_major_order() {
        let cells = Cube::unit(2).subcubes(2);
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[1].corner(), &[0.0, 0.5]);
        assert_eq!(cells[2].corner(), &[0.5, 0.0]);
        assert_eq!(Cube::unit(2).cell_index(&[0.7, 0.2], 2), 2);
        assert_eq!(Cube::unit(2).cell_index(&[1.0, 1.0], 2), 3);
    }
}
