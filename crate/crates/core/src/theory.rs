//! Coverage-based radius bounds for connectivity.
//!
//! Space is cut into cubes of width `γ·r` anchored at the domain's lower
//! corner. Cubes lying entirely inside the domain form `S`; each `i ∈ S` gets a
//! region `Q_i`, the union of its cube and the adjacent cubes, clipped to the
//! domain. With `γ = 1/C` and `C` large enough, any two points of one region
//! are closer than `r`. If every region holds a node and a center, any two
//! vertices are joined by a path of edges shorter than `2r`, so the bipartite
//! graph at radius `2r` is connected.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist2, sample, BoxRegion, Domain, PointSample, SampleMode};
use crate::seeding::{role_seed, trial_seed, Role};

/// Largest number of interior cells a coverage grid may hold.
pub const MAX_GRID_CELLS: usize = 50_000_000;

/// Fractions of `n` assigned to nodes and to centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub node_fraction: f64,
    pub center_fraction: f64,
}

impl Split {
    pub fn new(node_fraction: f64, center_fraction: f64) -> Result<Self> {
        let s = Split {
            node_fraction,
            center_fraction,
        };
        s.validate()?;
        Ok(s)
    }

    /// Split from the node fraction alone.
    pub fn from_node_fraction(node_fraction: f64) -> Result<Self> {
        Split::new(node_fraction, 1.0 - node_fraction)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.node_fraction, self.center_fraction);
        if !(a > 0.0 && b > 0.0) {
            return invalid(format!("split fractions must be positive, got {a}/{b}"));
        }
        if ((a + b) - 1.0).abs() > 1e-9 {
            return invalid(format!("split fractions must sum to 1, got {a}+{b}"));
        }
        Ok(())
    }

    /// Node and center counts for fixed-size sampling: `n1 = round(f·n)`,
    /// `n2 = n - n1`.
    pub fn counts(&self, n: u64) -> (u64, u64) {
        let n1 = (self.node_fraction * n as f64).round() as u64;
        let n1 = n1.min(n);
        (n1, n - n1)
    }

    /// Poisson intensities for the two processes.
    pub fn intensities(&self, n: u64) -> (f64, f64) {
        (
            self.node_fraction * n as f64,
            self.center_fraction * n as f64,
        )
    }

    /// Smallest `K` with `n1 ≥ n/K` and `n2 ≥ n/K`.
    pub fn k(&self) -> f64 {
        1.0 / self.node_fraction.min(self.center_fraction)
    }
}

impl Default for Split {
    fn default() -> Self {
        Split {
            node_fraction: 0.8,
            center_fraction: 0.2,
        }
    }
}

/// The slowly growing term `w(n)` of the weak bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthFn {
    Constant(f64),
    LogLog,
    SqrtLog,
}

impl GrowthFn {
    pub fn eval(&self, n: f64) -> f64 {
        match *self {
            GrowthFn::Constant(c) => c,
            GrowthFn::LogLog => n.ln().ln(),
            GrowthFn::SqrtLog => n.ln().sqrt(),
        }
    }
}

impl std::fmt::Display for GrowthFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GrowthFn::Constant(c) => write!(f, "const:{c}"),
            GrowthFn::LogLog => f.write_str("loglog"),
            GrowthFn::SqrtLog => f.write_str("sqrtlog"),
        }
    }
}

impl std::str::FromStr for GrowthFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loglog" => Ok(GrowthFn::LogLog),
            "sqrtlog" => Ok(GrowthFn::SqrtLog),
            _ => match s.strip_prefix("const:") {
                Some(v) => v
                    .parse()
                    .map(GrowthFn::Constant)
                    .map_err(|e| Error::Parse(format!("w constant {v:?}: {e}"))),
                None => Err(Error::Parse(format!(
                    "unknown w(n) {s:?}; expected loglog, sqrtlog or const:<value>"
                ))),
            },
        }
    }
}

/// Smallest `C` for which a 3×…×3 block of cubes of width `r/C` has diameter
/// strictly below `r`, rounded up by a relative 1e-9 so the strict inequality
/// survives floating point.
pub fn default_c(d: usize) -> f64 {
    3.0 * (d as f64).sqrt() * (1.0 + 1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    pub d: usize,
    pub split: Split,
    /// Domain constant bounding region diameters by `C·γ·r`.
    pub c: f64,
    pub f_min: f64,
    pub epsilon: f64,
    pub w: GrowthFn,
}

impl TheoryParams {
    pub fn new(
        d: usize,
        split: Split,
        c: f64,
        f_min: f64,
        epsilon: f64,
        w: GrowthFn,
    ) -> Result<Self> {
        let p = TheoryParams {
            d,
            split,
            c,
            f_min,
            epsilon,
            w,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit cube defaults: 0.8/0.2 split, `C = default_c(d)`, `f_min = 1`,
    /// `ε = 1`, `w(n) = log log n`.
    pub fn unit_cube(d: usize) -> Self {
        TheoryParams {
            d,
            split: Split::default(),
            c: default_c(d),
            f_min: 1.0,
            epsilon: 1.0,
            w: GrowthFn::LogLog,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return invalid("dimension must be at least 1");
        }
        self.split.validate()?;
        if !(self.c > 0.0) || !self.c.is_finite() {
            return invalid(format!("C must be positive, got {}", self.c));
        }
        if !(self.f_min > 0.0) || !self.f_min.is_finite() {
            return invalid(format!("f_min must be positive, got {}", self.f_min));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        Ok(())
    }

    pub fn k(&self) -> f64 {
        self.split.k()
    }

    pub fn gamma(&self) -> f64 {
        1.0 / self.c
    }

    /// Solves `n · f_min/(K·C^d) · r^d = rhs` for `r`.
    fn solve(&self, n: f64, rhs: f64) -> Result<f64> {
        if !(rhs > 0.0) {
            return invalid(format!("bound right-hand side {rhs} is not positive"));
        }
        let coef = self.k() * self.c.powi(self.d as i32) / (n * self.f_min);
        Ok((coef * rhs).powf(1.0 / self.d as f64))
    }
}

fn check_n(n: u64) -> Result<f64> {
    if n < 3 {
        return invalid(format!(
            "n must be at least 3 so that log log n > 0, got {n}"
        ));
    }
    Ok(n as f64)
}

/// Radius meeting the asymptotic coverage condition with equality:
/// `n·f_min/(K·C^d)·r^d = log n − log log n + w(n)`.
pub fn radius_weak(n: u64, p: &TheoryParams) -> Result<f64> {
    p.validate()?;
    let nf = check_n(n)?;
    p.solve(nf, nf.ln() - nf.ln().ln() + p.w.eval(nf))
}

/// Radius meeting the almost-sure coverage condition with equality:
/// `n·f_min/(K·C^d)·r^d = 2 log n + ε log log n`.
pub fn radius_strong(n: u64, p: &TheoryParams) -> Result<f64> {
    p.validate()?;
    let nf = check_n(n)?;
    p.solve(nf, 2.0 * nf.ln() + p.epsilon * nf.ln().ln())
}

/// The cube partition and its coverage regions for one radius.
#[derive(Debug, Clone)]
pub struct CoverageGrid {
    pub domain: Domain,
    pub radius: f64,
    pub cube_width: f64,
    /// Interior cubes per axis; `S` is the full product of `0..count`.
    pub interior_per_axis: Vec<usize>,
}

/// Number of whole cubes of width `w` fitting in `[0, len]` from the origin.
fn whole_cubes(len: f64, w: f64) -> usize {
    let mut k = (len / w).floor().max(0.0) as usize;
    while (k + 1) as f64 * w <= len {
        k += 1;
    }
    while k > 0 && k as f64 * w > len {
        k -= 1;
    }
    k
}

impl CoverageGrid {
    pub fn dim(&self) -> usize {
        self.interior_per_axis.len()
    }

    /// `|S|`.
    pub fn interior_count(&self) -> usize {
        self.interior_per_axis.iter().product()
    }

    /// Cell coordinates of the `idx`-th interior cube (row-major, last axis
    /// fastest).
    pub fn cell(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = idx % self.interior_per_axis[k];
            idx /= self.interior_per_axis[k];
        }
        out
    }

    fn linear(&self, cell: &[usize]) -> usize {
        cell.iter()
            .zip(&self.interior_per_axis)
            .fold(0, |acc, (&c, &m)| acc * m + c)
    }

    /// The cube `C_i` itself.
    pub fn cube(&self, idx: usize) -> BoxRegion {
        let lo = &self.domain.bounds.lower;
        let w = self.cube_width;
        let cell = self.cell(idx);
        BoxRegion {
            lower: cell
                .iter()
                .zip(lo)
                .map(|(&c, l)| l + c as f64 * w)
                .collect(),
            upper: cell
                .iter()
                .zip(lo)
                .map(|(&c, l)| l + (c + 1) as f64 * w)
                .collect(),
        }
    }

    /// `Q_i`: the cube and its neighbors, clipped to the domain. For a box
    /// domain this union is itself a box.
    pub fn region(&self, idx: usize) -> BoxRegion {
        let b = &self.domain.bounds;
        let w = self.cube_width;
        let cell = self.cell(idx);
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for (k, &c) in cell.iter().enumerate() {
            let lo = b.lower[k] + (c as f64 - 1.0) * w;
            let hi = b.lower[k] + (c as f64 + 2.0) * w;
            lower.push(lo.max(b.lower[k]));
            upper.push(hi.min(b.upper[k]));
        }
        BoxRegion { lower, upper }
    }

    pub fn regions(&self) -> impl Iterator<Item = BoxRegion> + '_ {
        (0..self.interior_count()).map(|i| self.region(i))
    }

    /// Calls `f` with the index of every region containing `p`: those whose
    /// cube is the cell of `p` or adjacent to it.
    fn for_each_region_containing<F: FnMut(usize)>(&self, p: &[f64], mut f: F) {
        let d = self.dim();
        let lo = &self.domain.bounds.lower;
        let mut from = vec![0usize; d];
        let mut to = vec![0usize; d];
        for k in 0..d {
            let c = ((p[k] - lo[k]) / self.cube_width).floor();
            if !c.is_finite() || c < -1.0 {
                return;
            }
            let c = c as i64;
            let last = self.interior_per_axis[k] as i64 - 1;
            let a = (c - 1).max(0);
            let b = (c + 1).min(last);
            if a > b {
                return;
            }
            from[k] = a as usize;
            to[k] = b as usize;
        }
        let mut cell = from.clone();
        loop {
            f(self.linear(&cell));
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if cell[k] < to[k] {
                    cell[k] += 1;
                    break;
                }
                cell[k] = from[k];
            }
        }
    }

    /// Marks which regions hold at least one point of `s`.
    fn occupied(&self, s: &PointSample) -> Vec<bool> {
        let mut hit = vec![false; self.interior_count()];
        for p in s.iter() {
            self.for_each_region_containing(p, |i| hit[i] = true);
        }
        hit
    }
}

/// Builds the cube grid of width `γ·r` and verifies its invariants: interior
/// cubes lie in the domain, `|S|·(γr)^d ≤ vol(D)`, every region has diameter
/// below `r` and measure at least `f_min·(γr)^d`.
pub fn build_coverage_grid(domain: &Domain, r: f64, p: &TheoryParams) -> Result<CoverageGrid> {
    p.validate()?;
    if domain.dim() != p.d {
        return Err(Error::DimensionMismatch {
            expected: p.d,
            got: domain.dim(),
        });
    }
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("radius must be positive, got {r}"));
    }
    let w = p.gamma() * r;
    if w >= domain.bounds.shortest_side() {
        return Err(Error::NoInteriorCells { cube_width: w });
    }
    let b = &domain.bounds;
    let interior_per_axis: Vec<usize> = (0..p.d)
        .map(|k| whole_cubes(b.upper[k] - b.lower[k], w))
        .collect();
    let total = interior_per_axis
        .iter()
        .try_fold(1usize, |acc, &m| acc.checked_mul(m))
        .filter(|&t| t <= MAX_GRID_CELLS)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "coverage grid with cube width {w} exceeds {MAX_GRID_CELLS} cells"
            ))
        })?;
    if total == 0 {
        return Err(Error::NoInteriorCells { cube_width: w });
    }
    let grid = CoverageGrid {
        domain: domain.clone(),
        radius: r,
        cube_width: w,
        interior_per_axis,
    };

    let cube_vol = w.powi(p.d as i32);
    if total as f64 * cube_vol > domain.volume() * (1.0 + 1e-12) {
        return invalid("interior cubes exceed the domain volume");
    }
    let mass_floor = domain.f_min() * cube_vol;
    for i in 0..total {
        let cube = grid.cube(i);
        if !b.contains(&cube.lower) || !b.contains(&cube.upper) {
            return invalid(format!("cube {i} leaves the domain"));
        }
        let q = grid.region(i);
        if dist2(&q.lower, &q.upper) >= r * r {
            return invalid(format!(
                "region {i} has diameter {} ≥ r = {r}; C = {} is too small",
                q.diameter(),
                p.c
            ));
        }
        if domain.measure(&q) < mass_floor * (1.0 - 1e-12) {
            return invalid(format!("region {i} has measure below f_min·(γr)^d"));
        }
    }
    Ok(grid)
}

/// True iff every region holds at least one point of `a` and one of `b`.
pub fn coverage_holds(grid: &CoverageGrid, a: &PointSample, b: &PointSample) -> bool {
    if a.dim() != grid.dim() || b.dim() != grid.dim() {
        return false;
    }
    let hit_a = grid.occupied(a);
    if !hit_a.iter().all(|&h| h) {
        return false;
    }
    grid.occupied(b).iter().all(|&h| h)
}

/// Draws the two Poisson processes of one trial with intensities derived from
/// the split.
pub fn sample_poisson_pair(
    domain: &Domain,
    split: &Split,
    n: u64,
    seed: u64,
) -> Result<(PointSample, PointSample)> {
    let (m1, m2) = split.intensities(n);
    let a = sample(
        domain,
        SampleMode::Poisson,
        m1,
        role_seed(seed, Role::Nodes),
    )?;
    let b = sample(
        domain,
        SampleMode::Poisson,
        m2,
        role_seed(seed, Role::Centers),
    )?;
    Ok((a, b))
}

/// Fraction of `trials` in which both Poisson processes cover every region
/// of the grid at radius `r`, on `domain`.
pub fn coverage_probability_in(
    domain: &Domain,
    n: u64,
    p: &TheoryParams,
    r: f64,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let grid = build_coverage_grid(domain, r, p)?;
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (a, b) = sample_poisson_pair(domain, &p.split, n, trial_seed(seed, n, t))?;
            Ok(coverage_holds(&grid, &a, &b) as u64)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum::<u64>();
    Ok(hits as f64 / trials as f64)
}

/// [`coverage_probability_in`] on the unit cube of dimension `p.d`.
pub fn coverage_probability(
    n: u64,
    p: &TheoryParams,
    r: f64,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    coverage_probability_in(&Domain::unit_cube(p.d)?, n, p, r, trials, seed)
}
