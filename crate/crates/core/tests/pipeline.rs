use approx::assert_relative_eq;
use geohyper::experiments::{fit_slope, run_sweep, SweepConfig};
use geohyper::geometry::{dist2, sample_fixed};
use geohyper::hypergraph::connected_at;
use geohyper::theory::{
    build_coverage_grid, coverage_holds, coverage_probability, sample_poisson_pair,
};
use geohyper::{
    build_bipartite, critical_radius_exact, radius_strong, ConnectivityOptions, Domain, Hypergraph,
    Method, PointSample, TheoryParams,
};

fn instance(d: usize, n1: usize, n2: usize, seed: u64) -> (PointSample, PointSample) {
    let dom = Domain::unit_cube(d).unwrap();
    (
        sample_fixed(&dom, n1, seed),
        sample_fixed(&dom, n2, seed.wrapping_add(1)),
    )
}

#[test]
fn adjacency_matches_double_loop() {
    let (nodes, centers) = instance(2, 200, 50, 17);
    let g = build_bipartite(nodes.clone(), centers.clone(), 0.1).unwrap();
    for (c, members) in g.adjacency.iter().enumerate() {
        let want: Vec<usize> = (0..nodes.len())
            .filter(|&j| dist2(nodes.point(j), centers.point(c)) < 0.01)
            .collect();
        assert_eq!(members, &want);
    }
}

#[test]
fn hypergraph_survives_both_formats() {
    let (nodes, centers) = instance(3, 300, 60, 4);
    let h = build_bipartite(nodes, centers, 0.2)
        .unwrap()
        .to_hypergraph();
    let mut text = Vec::new();
    h.write_text(&mut text).unwrap();
    assert_eq!(Hypergraph::read_text(&text[..]).unwrap(), h);
    assert_eq!(Hypergraph::from_json(&h.to_json().unwrap()).unwrap(), h);
}

#[test]
fn critical_radius_is_the_connectivity_threshold() {
    for seed in 0..20 {
        let (nodes, centers) = instance(2, 160, 40, 1000 + seed);
        let res = critical_radius_exact(&nodes, &centers).unwrap();
        let opts = ConnectivityOptions::default();
        assert!(!connected_at(&nodes, &centers, res.r_star, opts).unwrap());
        assert!(connected_at(&nodes, &centers, res.r_star * (1.0 + 1e-12), opts).unwrap());
        let cert = res.certificate.unwrap();
        assert_relative_eq!(
            dist2(nodes.point(cert.node), centers.point(cert.center)).sqrt(),
            res.r_star,
            max_relative = 1e-15
        );
    }
}

#[test]
fn mean_critical_radius_decreases_over_a_tenfold_range() {
    let cfg = SweepConfig {
        trials: 50,
        ..SweepConfig::desk_scale(2, 31)
    };
    let res = run_sweep(&cfg).unwrap();
    let means: Vec<f64> = res.aggregates.iter().map(|a| a.mean_r.unwrap()).collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    for a in &res.aggregates {
        let (lo, mid, hi) = (a.min_r.unwrap(), a.mean_r.unwrap(), a.max_r.unwrap());
        assert!(0.0 < lo && lo <= mid && mid <= hi);
    }
}

#[test]
fn bisection_sweep_tracks_exact_sweep() {
    let base = SweepConfig {
        n_values: vec![300, 600, 1200],
        trials: 6,
        ..SweepConfig::desk_scale(3, 8)
    };
    let exact = run_sweep(&base).unwrap();
    let bis = run_sweep(&SweepConfig {
        method: Method::Bisection,
        bisection_tol: 1e-10,
        ..base
    })
    .unwrap();
    for (a, b) in exact.trials.iter().zip(&bis.trials) {
        assert_eq!(a.seed, b.seed);
        let gap = b.r_star.unwrap() - a.r_star.unwrap();
        assert!((0.0..=1e-10).contains(&gap), "gap {gap}");
    }
}

#[test]
fn slope_of_exact_power_law() {
    let pts: Vec<(f64, f64)> = [1e3, 3e3, 1e4]
        .iter()
        .map(|&n: &f64| (n, 7.0 * n.powf(-0.5)))
        .collect();
    let fit = fit_slope(&pts).unwrap();
    assert_relative_eq!(fit.slope, -0.5, epsilon = 1e-12);
    assert!(fit.residual < 1e-20);
}

#[test]
fn coverage_implies_connectivity_in_three_dimensions() {
    let dom = Domain::unit_cube(3).unwrap();
    let p = TheoryParams::unit_cube(3);
    let n = 20_000;
    let r = radius_strong(n, &p).unwrap();
    let grid = build_coverage_grid(&dom, r, &p).unwrap();
    for seed in 0..10 {
        let (a, b) = sample_poisson_pair(&dom, &p.split, n, seed).unwrap();
        if coverage_holds(&grid, &a, &b) {
            assert!(connected_at(&a, &b, 2.0 * r, ConnectivityOptions::default()).unwrap());
        }
    }
}

#[test]
fn coverage_saturates_at_large_radius() {
    let p = TheoryParams::unit_cube(2);
    // Cube width 0.25: a 4x4 grid, every region much larger than the point spacing.
    let prob = coverage_probability(10_000, &p, 0.25 * p.c, 100, 3).unwrap();
    assert_eq!(prob, 1.0);
}
