//! Domains, densities and point-process sampling.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seeding::rng_from_seed;

/// Squared Euclidean distance. Every radius test in the crate goes through
/// this function so that the same pair always yields the same bits.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}

/// A point of ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("point dimension must be at least 1");
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return invalid("point coordinates must be finite");
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// Axis-aligned box `[lower, upper]` in ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return invalid("box dimension must be at least 1");
        }
        if lower.iter().chain(&upper).any(|c| !c.is_finite()) {
            return invalid("box bounds must be finite");
        }
        if lower.iter().zip(&upper).any(|(lo, hi)| lo > hi) {
            return invalid("box lower bound exceeds upper bound");
        }
        Ok(BoxRegion { lower, upper })
    }

    pub fn unit_cube(d: usize) -> Self {
        BoxRegion {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    /// Intersection with another box; `None` when they do not overlap
    /// in a set of positive volume.
    pub fn intersect(&self, other: &BoxRegion) -> Option<BoxRegion> {
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let lo = self.lower[k].max(other.lower[k]);
            let hi = self.upper[k].min(other.upper[k]);
            if hi <= lo {
                return None;
            }
            lower.push(lo);
            upper.push(hi);
        }
        Some(BoxRegion { lower, upper })
    }

    /// Length of the main diagonal, the largest distance between two points
    /// of the box.
    pub fn diameter(&self) -> f64 {
        dist2(&self.lower, &self.upper).sqrt()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    pub fn shortest_side(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    Uniform,
}

/// Sampling domain: an axis-aligned box carrying a probability density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub bounds: BoxRegion,
    pub density: Density,
}

impl Domain {
    pub fn new(bounds: BoxRegion, density: Density) -> Result<Self> {
        if bounds
            .lower
            .iter()
            .zip(&bounds.upper)
            .any(|(lo, hi)| lo >= hi)
        {
            return invalid("domain needs lower < upper on every axis");
        }
        Ok(Domain { bounds, density })
    }

    /// The unit cube `[0,1]^d` with uniform density.
    pub fn unit_cube(d: usize) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be at least 1");
        }
        Domain::new(BoxRegion::unit_cube(d), Density::Uniform)
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn volume(&self) -> f64 {
        self.bounds.volume()
    }

    pub fn diameter(&self) -> f64 {
        self.bounds.diameter()
    }

    /// Minimum of the density over the domain.
    pub fn f_min(&self) -> f64 {
        match self.density {
            Density::Uniform => 1.0 / self.volume(),
        }
    }

    /// Probability mass the density puts on `region` (clipped to the domain).
    pub fn measure(&self, region: &BoxRegion) -> f64 {
        if region.dim() != self.dim() {
            return 0.0;
        }
        match self.density {
            Density::Uniform => match self.bounds.intersect(region) {
                Some(clipped) => (clipped.volume() / self.volume()).min(1.0),
                None => 0.0,
            },
        }
    }

    fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        match self.density {
            Density::Uniform => {
                for (lo, hi) in self.bounds.lower.iter().zip(&self.bounds.upper) {
                    let u: f64 = rng.random();
                    // Guard against rounding pushing lo + (hi - lo) * u onto hi's far side.
                    out.push((lo + (hi - lo) * u).min(*hi));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// Point count drawn from Poisson(n).
    Poisson,
    /// Exactly n points.
    Fixed,
}

impl std::str::FromStr for SampleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poisson" => Ok(SampleMode::Poisson),
            "fixed" => Ok(SampleMode::Fixed),
            other => Err(Error::Parse(format!("unknown sample mode {other:?}"))),
        }
    }
}

/// A sampled point set with its provenance. Coordinates are stored flat,
/// `dim` values per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    dim: usize,
    coords: Vec<f64>,
    pub mode: SampleMode,
    /// Poisson intensity or the fixed count.
    pub intensity_or_count: f64,
    pub seed: u64,
    pub domain: Domain,
}

impl PointSample {
    /// Wraps explicit points (e.g. read from a file) as a fixed-mode sample.
    pub fn from_points(domain: Domain, points: &[Point]) -> Result<Self> {
        let dim = domain.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            if !domain.bounds.contains(p.coords()) {
                return invalid(format!("point {:?} lies outside the domain", p.coords()));
            }
            coords.extend_from_slice(p.coords());
        }
        Ok(PointSample {
            dim,
            coords,
            mode: SampleMode::Fixed,
            intensity_or_count: points.len() as f64,
            seed: 0,
            domain,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    /// Returns a copy with every coordinate multiplied by `factor`, and the
    /// domain scaled with it.
    pub fn scaled(&self, factor: f64) -> PointSample {
        let scale = |v: &[f64]| v.iter().map(|x| x * factor).collect::<Vec<_>>();
        PointSample {
            coords: scale(&self.coords),
            domain: Domain {
                bounds: BoxRegion {
                    lower: scale(&self.domain.bounds.lower),
                    upper: scale(&self.domain.bounds.upper),
                },
                density: self.domain.density,
            },
            ..self.clone()
        }
    }

    /// Appends one point, keeping provenance as is.
    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    /// One row per point, header `x0,..,x{d-1}`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (0..self.dim).map(|k| format!("x{k}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(domain: Domain, r: R) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let coords = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            points.push(Point::new(coords)?);
        }
        PointSample::from_points(domain, &points)
    }
}

/// Draws a point sample. In Poisson mode the count is Poisson(`n`); in fixed
/// mode exactly `n` points are drawn, and `n` must be a whole number.
/// Identical arguments give a bit-identical sample.
pub fn sample(domain: &Domain, mode: SampleMode, n: f64, seed: u64) -> Result<PointSample> {
    let dim = domain.dim();
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    if !n.is_finite() || n < 0.0 {
        return invalid(format!("sample size must be non-negative, got {n}"));
    }
    let mut rng = rng_from_seed(seed);
    let count = match mode {
        SampleMode::Fixed => {
            if n.fract() != 0.0 {
                return invalid(format!("fixed mode needs an integer count, got {n}"));
            }
            n as usize
        }
        SampleMode::Poisson => {
            if n == 0.0 {
                0
            } else {
                let dist = Poisson::new(n)
                    .map_err(|e| Error::InvalidParameter(format!("poisson intensity {n}: {e}")))?;
                let k: f64 = dist.sample(&mut rng);
                k as usize
            }
        }
    };
    let mut coords = Vec::with_capacity(count * dim);
    for _ in 0..count {
        domain.draw_into(&mut rng, &mut coords);
    }
    Ok(PointSample {
        dim,
        coords,
        mode,
        intensity_or_count: n,
        seed,
        domain: domain.clone(),
    })
}

/// Fixed-count convenience wrapper around [`sample`].
pub fn sample_fixed(domain: &Domain, count: usize, seed: u64) -> PointSample {
    sample(domain, SampleMode::Fixed, count as f64, seed).expect("valid fixed-count request")
}
