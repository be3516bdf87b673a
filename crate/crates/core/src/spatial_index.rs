//! Fixed-radius near-neighbor search on a uniform grid of buckets.
//!
//! All radius tests are strict: a point at distance exactly `r` from the
//! query is not a neighbor.

use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::geometry::{dist2, Point};

/// Above this many cells the grid stores buckets in a hash map instead of a
/// dense offset table.
const DENSE_CELLS_PER_POINT: usize = 8;

#[derive(Debug, Clone)]
enum Buckets {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, (u32, u32)>),
}

/// Points bucketed by `floor(coord / cell_width)` on every axis.
///
/// Coordinates are copied into bucket order so that a bucket scan touches
/// contiguous memory.
#[derive(Debug, Clone)]
pub struct UniformGrid {
    dim: usize,
    cell_width: f64,
    min_cell: Vec<i64>,
    extent: Vec<i64>,
    buckets: Buckets,
    coords: Vec<f64>,
    index: Vec<u32>,
}

impl UniformGrid {
    /// Builds a grid over `flat`, which holds `dim` coordinates per point.
    pub fn build_flat(flat: &[f64], dim: usize, cell_width: f64) -> Result<Self> {
        if !(cell_width > 0.0) || !cell_width.is_finite() {
            return invalid(format!("cell width must be positive, got {cell_width}"));
        }
        if dim == 0 || !flat.len().is_multiple_of(dim) {
            return invalid("coordinate buffer does not match the dimension");
        }
        let n = flat.len() / dim;
        if n > u32::MAX as usize {
            return invalid("too many points for the grid");
        }
        let cell_of = |x: f64| (x / cell_width).floor() as i64;

        let mut min_cell = vec![i64::MAX; dim];
        let mut max_cell = vec![i64::MIN; dim];
        for p in flat.chunks_exact(dim) {
            for k in 0..dim {
                let c = cell_of(p[k]);
                min_cell[k] = min_cell[k].min(c);
                max_cell[k] = max_cell[k].max(c);
            }
        }
        if n == 0 {
            min_cell.fill(0);
            max_cell.fill(-1);
        }
        let extent: Vec<i64> = min_cell
            .iter()
            .zip(&max_cell)
            .map(|(lo, hi)| hi - lo + 1)
            .collect();

        // Mixed-radix cell id; None if the id space overflows u64.
        let total = extent
            .iter()
            .try_fold(1u64, |acc, &e| acc.checked_mul(e.max(0) as u64));

        let ids: Vec<u64> = flat
            .chunks_exact(dim)
            .map(|p| {
                let mut id = 0u64;
                for k in 0..dim {
                    let c = (cell_of(p[k]) - min_cell[k]) as u64;
                    id = id.wrapping_mul(extent[k] as u64).wrapping_add(c);
                }
                id
            })
            .collect();
        let total = match total {
            Some(t) => t,
            None => return invalid("grid too fine for the spread of the points"),
        };

        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by_key(|&i| (ids[i as usize], i));

        let mut coords = Vec::with_capacity(flat.len());
        for &i in &order {
            let i = i as usize;
            coords.extend_from_slice(&flat[i * dim..(i + 1) * dim]);
        }

        let buckets = if (total as usize) <= DENSE_CELLS_PER_POINT * n + 64 {
            let mut starts = vec![0u32; total as usize + 1];
            for &id in &ids {
                starts[id as usize + 1] += 1;
            }
            for c in 0..total as usize {
                starts[c + 1] += starts[c];
            }
            Buckets::Dense(starts)
        } else {
            let mut map = HashMap::new();
            let mut pos = 0usize;
            while pos < n {
                let id = ids[order[pos] as usize];
                let start = pos;
                while pos < n && ids[order[pos] as usize] == id {
                    pos += 1;
                }
                map.insert(id, (start as u32, pos as u32));
            }
            Buckets::Sparse(map)
        };

        Ok(UniformGrid {
            dim,
            cell_width,
            min_cell,
            extent,
            buckets,
            coords,
            index: order,
        })
    }

    pub fn build(points: &[Point], cell_width: f64) -> Result<Self> {
        let dim = points.first().map_or(1, Point::dim);
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            flat.extend_from_slice(p.coords());
        }
        UniformGrid::build_flat(&flat, dim, cell_width)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    fn bucket_range(&self, id: u64) -> Option<(usize, usize)> {
        match &self.buckets {
            Buckets::Dense(starts) => {
                let (a, b) = (starts[id as usize], starts[id as usize + 1]);
                (a < b).then_some((a as usize, b as usize))
            }
            Buckets::Sparse(map) => map.get(&id).map(|&(a, b)| (a as usize, b as usize)),
        }
    }

    /// Non-empty buckets as (cell coordinates, original point indices).
    pub fn buckets(&self) -> Vec<(Vec<i64>, Vec<usize>)> {
        let mut out: Vec<(Vec<i64>, Vec<usize>)> = Vec::new();
        for (slot, &orig) in self.index.iter().enumerate() {
            let p = &self.coords[slot * self.dim..(slot + 1) * self.dim];
            let cell: Vec<i64> = p
                .iter()
                .map(|x| (x / self.cell_width).floor() as i64)
                .collect();
            match out.last_mut() {
                Some((c, members)) if *c == cell => members.push(orig as usize),
                _ => out.push((cell, vec![orig as usize])),
            }
        }
        out
    }

    /// Calls `f(index, squared_distance)` for every point with
    /// `|point - query| < r`. Visits only cells that can meet the open ball.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, query: &[f64], r: f64, mut f: F) {
        debug_assert_eq!(query.len(), self.dim);
        if self.index.is_empty() || !(r > 0.0) {
            return;
        }
        let w = self.cell_width;
        let r2 = r * r;
        let d = self.dim;
        let mut lo = vec![0i64; d];
        let mut hi = vec![0i64; d];
        for k in 0..d {
            let a = ((query[k] - r) / w).floor() as i64;
            let b = ((query[k] + r) / w).floor() as i64;
            lo[k] = a.max(self.min_cell[k]);
            hi[k] = b.min(self.min_cell[k] + self.extent[k] - 1);
            if lo[k] > hi[k] {
                return;
            }
        }
        // Small slack keeps the cell-ball test conservative under rounding.
        let slack = 1e-9 * w;
        let mut cell = lo.clone();
        loop {
            let mut gap2 = 0.0;
            let mut id = 0u64;
            for k in 0..d {
                let c = cell[k];
                let left = c as f64 * w - slack;
                let right = (c + 1) as f64 * w + slack;
                let g = if query[k] < left {
                    left - query[k]
                } else if query[k] > right {
                    query[k] - right
                } else {
                    0.0
                };
                gap2 += g * g;
                id = id * self.extent[k] as u64 + (c - self.min_cell[k]) as u64;
            }
            if gap2 < r2 {
                if let Some((a, b)) = self.bucket_range(id) {
                    for slot in a..b {
                        let p = &self.coords[slot * d..(slot + 1) * d];
                        let s = dist2(p, query);
                        if s < r2 {
                            f(self.index[slot] as usize, s);
                        }
                    }
                }
            }
            // odometer step
            let mut k = d;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if cell[k] < hi[k] {
                    cell[k] += 1;
                    break;
                }
                cell[k] = lo[k];
            }
        }
    }

    /// Indices of all points strictly within `r` of `query`, ascending.
    pub fn neighbors_within(&self, query: &[f64], r: f64) -> Result<Vec<usize>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: query.len(),
            });
        }
        if !(r >= 0.0) {
            return invalid(format!("radius must be non-negative, got {r}"));
        }
        let mut out = Vec::new();
        self.for_each_within(query, r, |i, _| out.push(i));
        out.sort_unstable();
        Ok(out)
    }
}

/// Near-neighbor index that picks a grid or a linear scan.
///
/// A grid query inspects about 3^d cells, so once 3^d exceeds the number of
/// points the linear scan wins.
#[derive(Debug, Clone)]
pub enum NeighborIndex<'a> {
    Grid(UniformGrid),
    Scan { flat: &'a [f64], dim: usize },
}

impl<'a> NeighborIndex<'a> {
    /// Builds an index tuned for queries of radius `r` (cell width = `r`).
    pub fn auto(flat: &'a [f64], dim: usize, r: f64) -> Result<Self> {
        let n = flat.len().checked_div(dim).unwrap_or(0);
        let neighborhood = 3f64.powi(dim as i32);
        if neighborhood > n as f64 || !(r > 0.0) || !r.is_finite() {
            return Ok(NeighborIndex::Scan { flat, dim });
        }
        match UniformGrid::build_flat(flat, dim, r) {
            Ok(g) => Ok(NeighborIndex::Grid(g)),
            // Overflowing id space: fall back to scanning.
            Err(Error::InvalidParameter(_)) => Ok(NeighborIndex::Scan { flat, dim }),
            Err(e) => Err(e),
        }
    }

    pub fn for_each_within<F: FnMut(usize, f64)>(&self, query: &[f64], r: f64, mut f: F) {
        match self {
            NeighborIndex::Grid(g) => g.for_each_within(query, r, f),
            NeighborIndex::Scan { flat, dim } => {
                let r2 = r * r;
                for (i, p) in flat.chunks_exact(*dim).enumerate() {
                    let s = dist2(p, query);
                    if s < r2 {
                        f(i, s);
                    }
                }
            }
        }
    }
}
