//! Random geometric hypergraphs built from bipartite geometric graphs.
//!
//! Nodes and hyperedge centers are sampled in a box; a node belongs to a
//! hyperedge when it lies strictly within radius `r` of the center. The crate
//! samples such graphs, measures the radius at which the bipartite graph
//! becomes connected, evaluates the coverage-based radius bounds that
//! guarantee connectivity, and runs Monte Carlo sweeps over `n`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod hypergraph;
pub mod plot;
pub mod seeding;
pub mod spatial_index;
pub mod theory;
pub mod threshold;
pub mod union_find;

pub use error::{Error, Result};
pub use experiments::{run_sweep, SweepConfig, SweepResult};
pub use geometry::{sample, BoxRegion, Domain, Point, PointSample, SampleMode};
pub use hypergraph::{build_bipartite, BipartiteGeometricGraph, ConnectivityOptions, Hypergraph};
pub use theory::{radius_strong, radius_weak, Split, TheoryParams};
pub use threshold::{
    critical_radius_bisection, critical_radius_exact, CriticalRadiusResult, Method,
};
