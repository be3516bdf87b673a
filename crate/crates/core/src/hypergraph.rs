//! Bipartite geometric graphs and the hypergraphs they induce.
//!
//! Vertices of the bipartite graph are the nodes (hypergraph vertices) and the
//! centers (one per hyperedge). A node and a center are adjacent iff their
//! distance is strictly less than the radius. Connectivity always refers to
//! the bipartite graph on all nodes and centers together.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::PointSample;
use crate::spatial_index::NeighborIndex;
use crate::union_find::UnionFind;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityOptions {
    /// Drop centers with no node in range before testing connectivity.
    pub ignore_empty_centers: bool,
}

#[derive(Debug, Clone)]
pub struct BipartiteGeometricGraph {
    pub nodes: PointSample,
    pub centers: PointSample,
    pub radius: f64,
    /// For each center, the ascending indices of the nodes within `radius`.
    pub adjacency: Vec<Vec<usize>>,
}

fn check_pair(nodes: &PointSample, centers: &PointSample) -> Result<()> {
    if nodes.dim() != centers.dim() {
        return Err(Error::DimensionMismatch {
            expected: nodes.dim(),
            got: centers.dim(),
        });
    }
    Ok(())
}

/// Builds the bipartite graph with edges `|node - center| < r`.
pub fn build_bipartite(
    nodes: PointSample,
    centers: PointSample,
    r: f64,
) -> Result<BipartiteGeometricGraph> {
    check_pair(&nodes, &centers)?;
    if !(r > 0.0) || !r.is_finite() {
        return invalid(format!("radius must be positive, got {r}"));
    }
    let index = NeighborIndex::auto(nodes.flat(), nodes.dim(), r)?;
    let adjacency: Vec<Vec<usize>> = (0..centers.len())
        .into_par_iter()
        .map(|c| {
            let mut members = Vec::new();
            index.for_each_within(centers.point(c), r, |j, _| members.push(j));
            members.sort_unstable();
            members
        })
        .collect();
    drop(index);
    Ok(BipartiteGeometricGraph {
        nodes,
        centers,
        radius: r,
        adjacency,
    })
}

impl BipartiteGeometricGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn center_count(&self) -> usize {
        self.centers.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// For each node, the ascending indices of the centers it is adjacent to.
    pub fn node_adjacency(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.node_count()];
        for (c, members) in self.adjacency.iter().enumerate() {
            for &j in members {
                out[j].push(c);
            }
        }
        out
    }

    /// Forgets the geometry: one hyperedge per center.
    pub fn to_hypergraph(&self) -> Hypergraph {
        Hypergraph {
            node_count: self.node_count(),
            hyperedges: self.adjacency.clone(),
        }
    }

    pub fn component_count_with(&self, opts: ConnectivityOptions) -> usize {
        let n1 = self.node_count();
        let mut uf = UnionFind::new(n1 + self.center_count());
        let mut empty = 0;
        for (c, members) in self.adjacency.iter().enumerate() {
            if members.is_empty() {
                empty += 1;
            }
            for &j in members {
                uf.union(j, n1 + c);
            }
        }
        if opts.ignore_empty_centers {
            uf.components() - empty
        } else {
            uf.components()
        }
    }

    /// Number of connected components over all nodes and centers.
    pub fn component_count(&self) -> usize {
        self.component_count_with(ConnectivityOptions::default())
    }

    pub fn is_connected_with(&self, opts: ConnectivityOptions) -> bool {
        self.component_count_with(opts) <= 1
    }

    /// True iff the bipartite graph has at most one component. Empty and
    /// single-vertex graphs count as connected.
    pub fn is_connected(&self) -> bool {
        self.is_connected_with(ConnectivityOptions::default())
    }

    /// Edge list as CSV, header `node,center`, center-major order.
    pub fn write_edges_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "node,center")?;
        for (c, members) in self.adjacency.iter().enumerate() {
            for &j in members {
                writeln!(w, "{j},{c}")?;
            }
        }
        Ok(())
    }
}

/// Components of the bipartite graph at radius `r` without materializing the
/// adjacency. With `stop_at_one` the scan ends as soon as everything is
/// joined (only meaningful when empty centers are not ignored).
fn components_at(
    nodes: &PointSample,
    centers: &PointSample,
    r: f64,
    opts: ConnectivityOptions,
    stop_at_one: bool,
) -> Result<usize> {
    check_pair(nodes, centers)?;
    let n1 = nodes.len();
    let total = n1 + centers.len();
    if total <= 1 {
        return Ok(total);
    }
    let mut uf = UnionFind::new(total);
    if !(r > 0.0) {
        // No edges at all.
        return Ok(if opts.ignore_empty_centers { n1 } else { total });
    }
    let index = NeighborIndex::auto(nodes.flat(), nodes.dim(), r)?;
    let mut empty = 0usize;
    for c in 0..centers.len() {
        let v = n1 + c;
        let mut degree = 0usize;
        index.for_each_within(centers.point(c), r, |j, _| {
            degree += 1;
            uf.union(j, v);
        });
        if degree == 0 {
            empty += 1;
        }
        if stop_at_one && !opts.ignore_empty_centers && uf.components() == 1 {
            return Ok(1);
        }
    }
    Ok(if opts.ignore_empty_centers {
        uf.components() - empty
    } else {
        uf.components()
    })
}

/// Whether the bipartite graph at radius `r` is connected, computed without
/// building the adjacency lists.
pub fn connected_at(
    nodes: &PointSample,
    centers: &PointSample,
    r: f64,
    opts: ConnectivityOptions,
) -> Result<bool> {
    Ok(components_at(nodes, centers, r, opts, true)? <= 1)
}

pub fn component_count_at(
    nodes: &PointSample,
    centers: &PointSample,
    r: f64,
    opts: ConnectivityOptions,
) -> Result<usize> {
    components_at(nodes, centers, r, opts, false)
}

/// A hypergraph reduced to labels and memberships. Hyperedges may be empty
/// and may repeat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    pub node_count: usize,
    pub hyperedges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(node_count: usize, hyperedges: Vec<Vec<usize>>) -> Result<Self> {
        let h = Hypergraph {
            node_count,
            hyperedges,
        };
        h.validate()?;
        Ok(h)
    }

    fn validate(&self) -> Result<()> {
        for (e, members) in self.hyperedges.iter().enumerate() {
            if let Some(&bad) = members.iter().find(|&&j| j >= self.node_count) {
                return Err(Error::Parse(format!(
                    "hyperedge {e} references node {bad} but there are only {} nodes",
                    self.node_count
                )));
            }
        }
        Ok(())
    }

    /// Text format: a header line `nodes=<n> hyperedges=<m>`, then one line per
    /// hyperedge listing zero-based node indices separated by commas.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "nodes={} hyperedges={}",
            self.node_count,
            self.hyperedges.len()
        )?;
        for members in &self.hyperedges {
            let line: Vec<String> = members.iter().map(usize::to_string).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))??;
        let (mut nodes, mut edges) = (None, None);
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("nodes", v)) => nodes = v.parse::<usize>().ok(),
                Some(("hyperedges", v)) => edges = v.parse::<usize>().ok(),
                _ => return Err(Error::Parse(format!("bad header field {field:?}"))),
            }
        }
        let (node_count, edge_count) = match (nodes, edges) {
            (Some(n), Some(m)) => (n, m),
            _ => return Err(Error::Parse(format!("bad header {header:?}"))),
        };
        let mut hyperedges = Vec::with_capacity(edge_count);
        for line in lines.take(edge_count) {
            let line = line?;
            let members = if line.trim().is_empty() {
                Vec::new()
            } else {
                line.split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            hyperedges.push(members);
        }
        if hyperedges.len() != edge_count {
            return Err(Error::Parse(format!(
                "header announces {edge_count} hyperedges, found {}",
                hyperedges.len()
            )));
        }
        Hypergraph::new(node_count, hyperedges)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let h: Hypergraph = serde_json::from_str(s)?;
        h.validate()?;
        Ok(h)
    }
}
