//! Critical connectivity radius of a bipartite geometric graph.
//!
//! `r_star` is reported as an infimum: with the strict edge rule the graph is
//! NOT connected at `r_star` itself and is connected at every `r > r_star`.
//! Callers that need a connected graph must pick a radius above `r_star`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::PointSample;
use crate::hypergraph::{connected_at, ConnectivityOptions};
use crate::spatial_index::NeighborIndex;
use crate::union_find::UnionFind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactBottleneck,
    Bisection,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactBottleneck => "exact_bottleneck",
            Method::Bisection => "bisection",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact_bottleneck" => Ok(Method::ExactBottleneck),
            "bisection" => Ok(Method::Bisection),
            other => Err(Error::Parse(format!("unknown method {other:?}"))),
        }
    }
}

/// The node-center pair whose distance equals `r_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BottleneckEdge {
    pub node: usize,
    pub center: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRadiusResult {
    pub r_star: f64,
    pub method: Method,
    /// Bisection steps taken; zero for the exact method.
    pub iterations: u32,
    pub certificate: Option<BottleneckEdge>,
}

#[derive(Debug, Clone, Copy)]
pub struct ExactOptions {
    /// Candidate-edge budget; past it the exact method hands over to
    /// bisection with grid-accelerated connectivity checks.
    pub max_candidate_edges: usize,
    /// Tolerance used by that fallback, relative to the point-set diameter.
    pub fallback_rel_tol: f64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            max_candidate_edges: 100_000_000,
            fallback_rel_tol: 1e-12,
        }
    }
}

fn check_inputs(nodes: &PointSample, centers: &PointSample) -> Result<()> {
    if nodes.dim() != centers.dim() {
        return Err(Error::DimensionMismatch {
            expected: nodes.dim(),
            got: centers.dim(),
        });
    }
    let (n1, n2) = (nodes.len(), centers.len());
    if n1 + n2 < 2 {
        return invalid("need at least two vertices for a critical radius");
    }
    if n2 == 0 || n1 == 0 {
        return Err(Error::NeverConnects(format!(
            "{n1} nodes and {n2} centers: a bipartite graph needs both sides to join them"
        )));
    }
    Ok(())
}

/// Largest float whose square does not exceed `d2`, so the strict test
/// `d2 < r * r` fails at the returned radius.
fn radius_from_squared(d2: f64) -> f64 {
    let mut r = d2.sqrt();
    while r > 0.0 && r * r > d2 {
        r = r.next_down();
    }
    r
}

/// Volume of the unit ball in ℝ^d.
fn unit_ball_volume(d: usize) -> f64 {
    let mut v = [1.0, 2.0];
    if d < 2 {
        return v[d];
    }
    for k in 2..=d {
        let next = v[k % 2] * 2.0 * std::f64::consts::PI / k as f64;
        v[k % 2] = next;
    }
    v[d % 2]
}

/// Bounding box (lower, upper) of both samples.
fn joint_bounds(nodes: &PointSample, centers: &PointSample) -> (Vec<f64>, Vec<f64>) {
    let d = nodes.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in nodes.iter().chain(centers.iter()) {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

/// Starting radius for candidate collection: roughly where the last node
/// stops being isolated in a uniform sample of the bounding box.
fn initial_radius(nodes: &PointSample, centers: &PointSample, diameter: f64) -> f64 {
    let d = nodes.dim();
    let (lo, hi) = joint_bounds(nodes, centers);
    let volume: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    let (n1, n2) = (nodes.len() as f64, centers.len() as f64);
    let isolation = |own: f64, other: f64| own.max(2.0).ln() / other.max(1.0);
    let mass = isolation(n1, n2).max(isolation(n2, n1));
    let guess = (volume * mass / unit_ball_volume(d)).powf(1.0 / d as f64);
    if guess.is_finite() && guess > 0.0 {
        guess.min(diameter)
    } else {
        diameter / 2.0
    }
}

enum Candidates {
    Edges(Vec<(f64, u32, u32)>),
    OverBudget,
}

fn collect_candidates(
    nodes: &PointSample,
    centers: &PointSample,
    r: f64,
    budget: usize,
) -> Result<Candidates> {
    let index = NeighborIndex::auto(nodes.flat(), nodes.dim(), r)?;
    let mut edges: Vec<(f64, u32, u32)> = Vec::new();
    for c in 0..centers.len() {
        index.for_each_within(centers.point(c), r, |j, d2| {
            edges.push((d2, j as u32, c as u32));
        });
        if edges.len() > budget {
            return Ok(Candidates::OverBudget);
        }
    }
    Ok(Candidates::Edges(edges))
}

/// Exact critical radius: the largest edge of a minimum bottleneck spanning
/// tree of the node-center distance graph.
///
/// Edges are gathered only up to a trial radius `R` (grid accelerated) and fed
/// to Kruskal in ascending order. If they connect everything, every edge no
/// longer than the bottleneck was present, so the answer is exact; otherwise
/// `R` grows and the sweep repeats. The sweep stops at the first edge that
/// leaves a single component.
pub fn critical_radius_exact(
    nodes: &PointSample,
    centers: &PointSample,
) -> Result<CriticalRadiusResult> {
    critical_radius_exact_with(nodes, centers, &ExactOptions::default())
}

pub fn critical_radius_exact_with(
    nodes: &PointSample,
    centers: &PointSample,
    opts: &ExactOptions,
) -> Result<CriticalRadiusResult> {
    check_inputs(nodes, centers)?;
    let n1 = nodes.len();
    let total = n1 + centers.len();

    let (lo, hi) = joint_bounds(nodes, centers);
    let spread = crate::geometry::dist2(&lo, &hi).sqrt();
    // Strictly above every pairwise distance.
    let full = if spread > 0.0 {
        spread * (1.0 + 1e-9)
    } else {
        1.0
    };
    let mut r = initial_radius(nodes, centers, full);

    loop {
        let mut edges = match collect_candidates(nodes, centers, r, opts.max_candidate_edges)? {
            Candidates::Edges(e) => e,
            Candidates::OverBudget => {
                let tol = opts.fallback_rel_tol * full;
                return critical_radius_bisection(nodes, centers, Some((0.0, full)), tol);
            }
        };
        edges.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));
        let mut uf = UnionFind::new(total);
        for &(d2, j, c) in &edges {
            if uf.union(j as usize, n1 + c as usize) && uf.components() == 1 {
                let r_star = radius_from_squared(d2);
                return Ok(CriticalRadiusResult {
                    r_star,
                    method: Method::ExactBottleneck,
                    iterations: 0,
                    certificate: Some(BottleneckEdge {
                        node: j as usize,
                        center: c as usize,
                        distance: r_star,
                    }),
                });
            }
        }
        if r >= full {
            return Err(Error::NeverConnects(
                "all node-center pairs added without joining every vertex".into(),
            ));
        }
        r = (r * 1.5).min(full);
    }
}

/// Bisection on the radius, testing connectivity at each midpoint.
///
/// `bounds` defaults to `(0, domain diameter)`; the graph must be disconnected
/// at the lower end and connected at the upper one. Stops once the bracket is
/// no wider than `tol` and returns its upper end, which lies within `tol`
/// above `r_star`.
pub fn critical_radius_bisection(
    nodes: &PointSample,
    centers: &PointSample,
    bounds: Option<(f64, f64)>,
    tol: f64,
) -> Result<CriticalRadiusResult> {
    if !(tol > 0.0) || !tol.is_finite() {
        return invalid(format!("tolerance must be positive, got {tol}"));
    }
    check_inputs(nodes, centers)?;
    let opts = ConnectivityOptions::default();
    let (mut lo, mut hi) = match bounds {
        Some((lo, hi)) => {
            if !(lo >= 0.0 && hi > lo) {
                return invalid(format!("bad bisection bracket [{lo}, {hi}]"));
            }
            (lo, hi)
        }
        None => {
            let diam = nodes.domain.diameter().max(centers.domain.diameter());
            (0.0, diam * (1.0 + 1e-9))
        }
    };
    if !connected_at(nodes, centers, hi, opts)? {
        return Err(Error::NeverConnects(format!(
            "not connected at the upper bracket radius {hi}"
        )));
    }
    if lo > 0.0 && connected_at(nodes, centers, lo, opts)? {
        return invalid(format!(
            "already connected at the lower bracket radius {lo}"
        ));
    }
    let mut iterations = 0u32;
    while hi - lo > tol {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if connected_at(nodes, centers, mid, opts)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(CriticalRadiusResult {
        r_star: hi,
        method: Method::Bisection,
        iterations,
        certificate: None,
    })
}

/// Dispatches on `method`; `tol` only matters for bisection.
pub fn critical_radius(
    nodes: &PointSample,
    centers: &PointSample,
    method: Method,
    tol: f64,
) -> Result<CriticalRadiusResult> {
    match method {
        Method::ExactBottleneck => critical_radius_exact(nodes, centers),
        Method::Bisection => critical_radius_bisection(nodes, centers, None, tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{dist2, sample_fixed, BoxRegion, Density, Domain, Point};
    use proptest::prelude::*;

    fn pts(domain: &Domain, coords: &[&[f64]]) -> PointSample {
        let points: Vec<Point> = coords
            .iter()
            .map(|c| Point::new(c.to_vec()).unwrap())
            .collect();
        PointSample::from_points(domain.clone(), &points).unwrap()
    }

    fn line() -> Domain {
        Domain::new(
            BoxRegion::new(vec![0.0], vec![1.0]).unwrap(),
            Density::Uniform,
        )
        .unwrap()
    }

    /// Brute-force oracle: Prim over the complete bipartite distance graph,
    /// tracking the largest edge used.
    fn prim_bottleneck(nodes: &PointSample, centers: &PointSample) -> f64 {
        let n1 = nodes.len();
        let total = n1 + centers.len();
        let pos = |v: usize| {
            if v < n1 {
                nodes.point(v)
            } else {
                centers.point(v - n1)
            }
        };
        let mut in_tree = vec![false; total];
        let mut best = vec![f64::INFINITY; total];
        best[0] = 0.0;
        let mut bottleneck: f64 = 0.0;
        for _ in 0..total {
            let v = (0..total)
                .filter(|&v| !in_tree[v])
                .min_by(|&a, &b| best[a].total_cmp(&best[b]))
                .unwrap();
            in_tree[v] = true;
            bottleneck = bottleneck.max(best[v]);
            for u in 0..total {
                if !in_tree[u] && ((u < n1) != (v < n1)) {
                    best[u] = best[u].min(dist2(pos(u), pos(v)));
                }
            }
        }
        bottleneck.sqrt()
    }

    #[test]
    fn single_pair() {
        let d = Domain::unit_cube(2).unwrap();
        let res =
            critical_radius_exact(&pts(&d, &[&[0.0, 0.0]]), &pts(&d, &[&[0.3, 0.4]])).unwrap();
        assert!((res.r_star - 0.5).abs() < 1e-15);
        let cert = res.certificate.unwrap();
        assert_eq!((cert.node, cert.center), (0, 0));
        assert_eq!(cert.distance, res.r_star);

        let b = critical_radius_bisection(
            &pts(&d, &[&[0.0, 0.0]]),
            &pts(&d, &[&[0.3, 0.4]]),
            None,
            1e-6,
        )
        .unwrap();
        assert!((b.r_star - 0.5).abs() <= 1e-6);
        let width: f64 = 2f64.sqrt() * (1.0 + 1e-9);
        assert!(b.iterations <= (width / 1e-6).log2().ceil() as u32);
    }

    #[test]
    fn farther_node_governs() {
        let d = line();
        let res = critical_radius_exact(&pts(&d, &[&[0.0], &[1.0]]), &pts(&d, &[&[0.25]])).unwrap();
        assert_eq!(res.r_star, 0.75);
    }

    #[test]
    fn never_connects_without_centers() {
        let d = line();
        let err = critical_radius_exact(&pts(&d, &[&[0.0], &[1.0]]), &pts(&d, &[])).unwrap_err();
        assert!(matches!(err, Error::NeverConnects(_)));
        let err = critical_radius_bisection(&pts(&d, &[&[0.0], &[1.0]]), &pts(&d, &[]), None, 1e-3)
            .unwrap_err();
        assert!(matches!(err, Error::NeverConnects(_)));
    }

    #[test]
    fn rejects_degenerate_requests() {
        let d = line();
        assert!(critical_radius_exact(&pts(&d, &[&[0.0]]), &pts(&d, &[])).is_err());
        let n = pts(&d, &[&[0.0]]);
        let c = pts(&d, &[&[0.5]]);
        assert!(critical_radius_bisection(&n, &c, None, 0.0).is_err());
        assert!(critical_radius_bisection(&n, &c, None, -1.0).is_err());
        assert!(critical_radius_bisection(&n, &c, Some((0.6, 1.0)), 1e-3).is_err());
    }

    #[test]
    fn coincident_points() {
        let d = Domain::unit_cube(2).unwrap();
        let nodes = pts(&d, &[&[0.2, 0.2], &[0.8, 0.2]]);
        let centers = pts(&d, &[&[0.2, 0.2], &[0.5, 0.2]]);
        let res = critical_radius_exact(&nodes, &centers).unwrap();
        assert!((res.r_star - 0.3).abs() < 1e-12);

        let nodes = pts(&d, &[&[0.4, 0.4]]);
        let centers = pts(&d, &[&[0.4, 0.4]]);
        let res = critical_radius_exact(&nodes, &centers).unwrap();
        assert_eq!(res.r_star, 0.0);
        assert!(connected_at(&nodes, &centers, 1e-12, ConnectivityOptions::default()).unwrap());
    }

    #[test]
    fn matches_prim_oracle() {
        for (dim, seed) in [(1usize, 1u64), (2, 2), (2, 3), (3, 4), (4, 5), (6, 6)] {
            let dom = Domain::unit_cube(dim).unwrap();
            let nodes = sample_fixed(&dom, 60, seed);
            let centers = sample_fixed(&dom, 15, seed + 100);
            let exact = critical_radius_exact(&nodes, &centers).unwrap().r_star;
            let oracle = prim_bottleneck(&nodes, &centers);
            assert!((exact - oracle).abs() <= 1e-15 * oracle.max(1.0), "d={dim}");
        }
    }

    #[test]
    fn over_budget_falls_back_to_bisection() {
        let dom = Domain::unit_cube(2).unwrap();
        let nodes = sample_fixed(&dom, 200, 1);
        let centers = sample_fixed(&dom, 50, 2);
        let exact = critical_radius_exact(&nodes, &centers).unwrap();
        let opts = ExactOptions {
            max_candidate_edges: 10,
            fallback_rel_tol: 1e-12,
        };
        let fb = critical_radius_exact_with(&nodes, &centers, &opts).unwrap();
        assert_eq!(fb.method, Method::Bisection);
        assert!((fb.r_star - exact.r_star).abs() <= 2e-12 * 2f64.sqrt());
    }

    #[test]
    fn unit_ball_volumes() {
        let pi = std::f64::consts::PI;
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - pi).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * pi / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(10) - pi.powi(5) / 120.0).abs() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn threshold_properties(seed in any::<u64>(), n1 in 2usize..60, n2 in 1usize..20, dim in 1usize..4, scale in 0.1f64..10.0) {
            let dom = Domain::unit_cube(dim).unwrap();
            let nodes = sample_fixed(&dom, n1, seed);
            let centers = sample_fixed(&dom, n2, seed.wrapping_add(1));
            let res = critical_radius_exact(&nodes, &centers).unwrap();
            let r = res.r_star;
            let opts = ConnectivityOptions::default();

            // strictness
            prop_assert!(!connected_at(&nodes, &centers, r, opts).unwrap());
            let eps = 10.0 * f64::EPSILON * dom.diameter();
            prop_assert!(connected_at(&nodes, &centers, r + eps, opts).unwrap());

            // scale equivariance
            let scaled = critical_radius_exact(&nodes.scaled(scale), &centers.scaled(scale)).unwrap();
            prop_assert!((scaled.r_star - scale * r).abs() <= 1e-12 * scale * r.max(1e-300));

            // An extra center is itself a vertex, so it can raise the
            // threshold, but never beyond its own distance to the nearest node.
            let extra = sample_fixed(&dom, 1, seed.wrapping_add(2));
            let mut more = centers.clone();
            more.push(extra.point(0)).unwrap();
            let reach = nodes
                .iter()
                .map(|p| dist2(p, extra.point(0)))
                .fold(f64::INFINITY, f64::min)
                .sqrt();
            let r_more = critical_radius_exact(&nodes, &more).unwrap().r_star;
            prop_assert!(r_more <= r.max(reach) * (1.0 + 1e-15));

            // A center on top of an existing node never raises it.
            let mut stacked = centers.clone();
            stacked.push(nodes.point(0)).unwrap();
            prop_assert!(critical_radius_exact(&nodes, &stacked).unwrap().r_star <= r);
        }
    }
}
