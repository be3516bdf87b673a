//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.
//!
//! `cargo test -p geohyper --test acceptance`

use std::process::ExitCode;
use std::time::{Duration, Instant};

use geohyper::experiments::{
    connectivity_trend_ok, run_sweep, theorem_validation, write_trials_csv, SweepConfig,
};
use geohyper::geometry::{dist2, sample_fixed, Domain};
use geohyper::hypergraph::build_bipartite;
use geohyper::seeding::{mix64, rng_from_seed};
use geohyper::spatial_index::UniformGrid;
use geohyper::theory::{build_coverage_grid, TheoryParams};
use geohyper::threshold::{critical_radius_bisection, critical_radius_exact};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn sweep_slope(d: usize, trials: u64, band: (f64, f64), budget: Duration) -> Outcome {
    let cfg = SweepConfig {
        trials,
        ..SweepConfig::desk_scale(d, 20_240_501)
    };
    let start = Instant::now();
    let res = match run_sweep(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("sweep failed: {e}")),
    };
    let elapsed = start.elapsed();
    let Some(fit) = res.slope_fit else {
        return outcome(false, "no slope fit (aborted levels)");
    };
    let means: Vec<f64> = res.aggregates.iter().filter_map(|a| a.mean_r).collect();
    let in_band = fit.slope >= band.0 && fit.slope <= band.1;
    let in_time = elapsed <= budget;
    outcome(
        in_band && in_time && res.never_connects == 0,
        format!(
            "slope {:.4} (band [{}, {}]), mean r* {:.4} → {:.4}, {:.1}s (budget {}s)",
            fit.slope,
            band.0,
            band.1,
            means.first().unwrap_or(&f64::NAN),
            means.last().unwrap_or(&f64::NAN),
            elapsed.as_secs_f64(),
            budget.as_secs()
        ),
    )
}

struct Instance {
    nodes: geohyper::PointSample,
    centers: geohyper::PointSample,
    diameter: f64,
}

/// 200 instances with d ∈ {2, 3} and n ≤ 500, seeds drawn from a fixed stream.
fn oracle_instances() -> Vec<Instance> {
    let mut rng = rng_from_seed(0x0ac1e);
    (0..200)
        .map(|_| {
            let d = rng.random_range(2..=3usize);
            let n = rng.random_range(10..=500u64);
            let seed: u64 = rng.random();
            let dom = Domain::unit_cube(d).unwrap();
            let n1 = (0.8 * n as f64).round() as usize;
            Instance {
                nodes: sample_fixed(&dom, n1, mix64(seed)),
                centers: sample_fixed(&dom, n as usize - n1, mix64(seed ^ 1)),
                diameter: dom.diameter(),
            }
        })
        .collect()
}

fn oracle_agreement(instances: &[Instance]) -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for inst in instances {
        let tol = 1e-9 * inst.diameter;
        let exact = critical_radius_exact(&inst.nodes, &inst.centers)
            .unwrap()
            .r_star;
        let bis = critical_radius_bisection(&inst.nodes, &inst.centers, None, tol)
            .unwrap()
            .r_star;
        let gap = (bis - exact).abs();
        worst = worst.max(gap / inst.diameter);
        if gap > tol {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!(
            "{} instances, {failures} outside 1e-9·diameter, worst gap {worst:.3e}·diameter",
            instances.len()
        ),
    )
}

fn strictness(instances: &[Instance]) -> Outcome {
    let mut failures = 0;
    for inst in instances {
        let r = critical_radius_exact(&inst.nodes, &inst.centers)
            .unwrap()
            .r_star;
        let at = build_bipartite(inst.nodes.clone(), inst.centers.clone(), r).unwrap();
        let above_r = r + 10.0 * f64::EPSILON * inst.diameter;
        let above = build_bipartite(inst.nodes.clone(), inst.centers.clone(), above_r).unwrap();
        if at.is_connected() || !above.is_connected() {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("{} instances, {failures} violations", instances.len()),
    )
}

fn theorem_implication() -> Outcome {
    let n_values = [1_000u64, 3_000, 10_000];
    let rows = match theorem_validation(&n_values, 2, 334, 0x7e0) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("validation failed: {e}")),
    };
    let total: u64 = rows.iter().map(|r| r.trials).sum();
    let violations: u64 = rows.iter().map(|r| r.violations).sum();
    let trend = connectivity_trend_ok(&rows);
    let per_n: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "n={} cov {:.3} conn {:.3}",
                r.n,
                r.coverage_fraction(),
                r.connected_fraction()
            )
        })
        .collect();
    outcome(
        total >= 1000 && violations == 0 && trend,
        format!(
            "{total} trials, {violations} violations, trend {}; {}",
            if trend { "ok" } else { "broken" },
            per_n.join("; ")
        ),
    )
}

fn spatial_index_equivalence() -> Outcome {
    let mut rng = rng_from_seed(0x5ea7c4);
    let mut queries = 0;
    let mut mismatches = 0;
    for d in [2usize, 3, 4] {
        let dom = Domain::unit_cube(d).unwrap();
        for batch in 0..20u64 {
            let n = rng.random_range(50..=2_000usize);
            let pts = sample_fixed(&dom, n, rng.random());
            let cell = rng.random_range(0.02..0.5);
            let grid = UniformGrid::build_flat(pts.flat(), d, cell).unwrap();
            let qs = sample_fixed(&dom, 167, mix64(batch ^ d as u64));
            for q in qs.iter() {
                let r = rng.random_range(0.0..0.4);
                let got = grid.neighbors_within(q, r).unwrap();
                let want: Vec<usize> = pts
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| dist2(p, q) < r * r)
                    .map(|(i, _)| i)
                    .collect();
                queries += 1;
                if got != want {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        queries >= 10_000 && mismatches == 0,
        format!("{queries} queries, {mismatches} mismatches"),
    )
}

fn grid_invariants() -> Outcome {
    let mut rng = rng_from_seed(0x9e1d);
    let mut regions = 0usize;
    let mut failures = Vec::new();
    for cfg in 0..100 {
        let d = rng.random_range(1..=4usize);
        let p = TheoryParams::unit_cube(d);
        let dom = Domain::unit_cube(d).unwrap();
        let width = rng.random_range(0.04..0.95);
        let r = width * p.c;
        let grid = match build_coverage_grid(&dom, r, &p) {
            Ok(g) => g,
            Err(e) => {
                failures.push(format!("config {cfg}: {e}"));
                continue;
            }
        };
        let w = grid.cube_width;
        let floor = dom.f_min() * (p.gamma() * r).powi(d as i32);
        for i in 0..grid.interior_count() {
            regions += 1;
            // Q_i from cube coordinates: cells i-1..=i+1 on each axis, clipped.
            let cell = grid.cell(i);
            let lower: Vec<f64> = cell
                .iter()
                .map(|&c| ((c as f64 - 1.0) * w).max(0.0))
                .collect();
            let upper: Vec<f64> = cell
                .iter()
                .map(|&c| ((c as f64 + 2.0) * w).min(1.0))
                .collect();
            let q = grid.region(i);
            let diag2: f64 = lower
                .iter()
                .zip(&upper)
                .map(|(a, b)| (b - a) * (b - a))
                .sum();
            let volume: f64 = lower.iter().zip(&upper).map(|(a, b)| b - a).product();
            if q.lower != lower || q.upper != upper {
                failures.push(format!("config {cfg} region {i}: box mismatch"));
            } else if diag2 >= r * r {
                failures.push(format!(
                    "config {cfg} region {i}: diameter {} ≥ r {r}",
                    diag2.sqrt()
                ));
            } else if volume < floor {
                failures.push(format!(
                    "config {cfg} region {i}: measure {volume} < {floor}"
                ));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "100 configurations, {regions} regions checked, {} failures{}",
            failures.len(),
            failures
                .first()
                .map(|f| format!(" (first: {f})"))
                .unwrap_or_default()
        ),
    )
}

fn determinism_across_threads() -> Outcome {
    let cfg = SweepConfig {
        n_values: vec![200, 500, 1_000],
        trials: 12,
        ..SweepConfig::desk_scale(2, 99)
    };
    let max = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut outputs = Vec::new();
    for threads in [1, 4, max] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let res = pool.install(|| run_sweep(&cfg)).unwrap();
        let mut csv = Vec::new();
        write_trials_csv(&res.trials, &mut csv).unwrap();
        outputs.push((threads, csv));
    }
    let same = outputs.windows(2).all(|w| w[0].1 == w[1].1);
    outcome(
        same,
        format!(
            "thread counts {:?}, trial CSVs {}",
            outputs.iter().map(|o| o.0).collect::<Vec<_>>(),
            if same { "byte-identical" } else { "differ" }
        ),
    )
}

fn main() -> ExitCode {
    // Accept and ignore libtest flags such as --nocapture.
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        println!(
            "[{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        results.push((name, o));
    };

    run("1 slope d=2", &|| {
        sweep_slope(2, 50, (-0.60, -0.40), Duration::from_secs(300))
    });
    run("2 slope d=4", &|| {
        sweep_slope(4, 50, (-0.35, -0.15), Duration::from_secs(600))
    });
    run("3 slope d=10", &|| {
        sweep_slope(10, 20, (-0.16, -0.04), Duration::from_secs(900))
    });
    let instances = oracle_instances();
    run("4 bisection vs exact", &|| oracle_agreement(&instances));
    run("5 strictness at r*", &|| strictness(&instances));
    run("6 coverage implies connectivity", &theorem_implication);
    run("7 spatial index vs brute force", &spatial_index_equivalence);
    run("8 coverage grid invariants", &grid_invariants);
    run("9 determinism across threads", &determinism_across_threads);

    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
