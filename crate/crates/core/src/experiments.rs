//! Monte Carlo sweeps of the critical radius over `n`, and the empirical
//! check that coverage at radius `r` implies connectivity at `2r`.
//!
//! Every trial owns an RNG stream derived from (master seed, n, trial index,
//! role), and results are collected in trial order, so output does not depend
//! on the number of worker threads.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{sample, Domain, PointSample, SampleMode};
use crate::hypergraph::{connected_at, ConnectivityOptions};
use crate::seeding::{role_seed, trial_seed, Role};
use crate::theory::{
    build_coverage_grid, coverage_holds, radius_strong, sample_poisson_pair, Split, TheoryParams,
};
use crate::threshold::{critical_radius, Method};

/// `count` integers spaced evenly in log scale over `[lo, hi]`.
pub fn log_spaced(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    spaced(lo, hi, count, |a, b, t| {
        (a.ln() + t * (b.ln() - a.ln())).exp()
    })
}

/// `count` integers spaced evenly over `[lo, hi]`.
pub fn linear_spaced(lo: u64, hi: u64, count: usize) -> Vec<u64> {
    spaced(lo, hi, count, |a, b, t| a + t * (b - a))
}

fn spaced(lo: u64, hi: u64, count: usize, at: impl Fn(f64, f64, f64) -> f64) -> Vec<u64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|k| {
                let t = k as f64 / (count - 1) as f64;
                at(lo as f64, hi as f64, t).round() as u64
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub d: usize,
    pub n_values: Vec<u64>,
    pub trials: u64,
    pub split: Split,
    pub mode: SampleMode,
    pub master_seed: u64,
    pub method: Method,
    /// Absolute bisection tolerance; unused by the exact method.
    pub bisection_tol: f64,
    /// Record per-trial wall time. Off by default because timings differ
    /// between runs and would break byte-identical trial files.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl SweepConfig {
    /// Desk-scale defaults: 8 log-spaced `n` in `[10^3, 10^4]`, 50 trials,
    /// 0.8/0.2 split, fixed counts, exact method.
    pub fn desk_scale(d: usize, master_seed: u64) -> Self {
        SweepConfig {
            d,
            n_values: log_spaced(1_000, 10_000, 8),
            trials: 50,
            split: Split::default(),
            mode: SampleMode::Fixed,
            master_seed,
            method: Method::ExactBottleneck,
            bisection_tol: 1e-9,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return invalid("dimension must be at least 1");
        }
        self.split.validate()?;
        if self.n_values.is_empty() {
            return invalid("n_values is empty");
        }
        if self.n_values.iter().any(|&n| n < 10) {
            return invalid("every n must be at least 10");
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("n_values must be strictly increasing");
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        if !(self.bisection_tol > 0.0) {
            return invalid("bisection tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: u64,
    pub trial_index: u64,
    pub seed: u64,
    pub n1: usize,
    pub n2: usize,
    /// `None` marks a trial whose graph never connects.
    pub r_star: Option<f64>,
    pub method: Method,
    pub wall_time_ms: Option<f64>,
}

/// Statistics of one `n` level. When any trial never connects the level is
/// aborted: the statistics are absent and `never_connects` says how many.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelAggregate {
    pub n: u64,
    pub trials: u64,
    pub mean_r: Option<f64>,
    pub min_r: Option<f64>,
    pub max_r: Option<f64>,
    pub never_connects: u64,
}

impl LevelAggregate {
    pub fn is_complete(&self) -> bool {
        self.never_connects == 0 && self.mean_r.is_some()
    }
}

/// Least-squares line through `(log n, log r)`. `residual` is the sum of
/// squared residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub aggregates: Vec<LevelAggregate>,
    /// Fit through the per-level means.
    pub slope_fit: Option<SlopeFit>,
    pub min_slope_fit: Option<SlopeFit>,
    pub max_slope_fit: Option<SlopeFit>,
    pub never_connects: u64,
    /// Per-trial records; written to the trial CSV, not the JSON summary.
    #[serde(skip)]
    pub trials: Vec<TrialRecord>,
}

/// Ordinary least squares of `log r` against `log n`.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 2 {
        return invalid("slope fit needs at least two points");
    }
    if points.iter().any(|&(n, r)| !(n > 0.0) || !(r > 0.0)) {
        return invalid("slope fit needs positive n and radius values");
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return invalid("slope fit needs at least two distinct n values");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        residual,
    })
}

/// Node and center samples of one instance of size `n`: fixed counts from
/// `split.counts(n)` or Poisson processes with `split.intensities(n)`.
pub fn sample_instance(
    domain: &Domain,
    split: &Split,
    mode: SampleMode,
    n: u64,
    seed: u64,
) -> Result<(PointSample, PointSample)> {
    let (size1, size2) = match mode {
        SampleMode::Fixed => {
            let (a, b) = split.counts(n);
            (a as f64, b as f64)
        }
        SampleMode::Poisson => split.intensities(n),
    };
    let nodes = sample(domain, mode, size1, role_seed(seed, Role::Nodes))?;
    let centers = sample(domain, mode, size2, role_seed(seed, Role::Centers))?;
    Ok((nodes, centers))
}

/// Runs one trial of a sweep.
pub fn run_trial(config: &SweepConfig, domain: &Domain, n: u64, trial: u64) -> Result<TrialRecord> {
    let seed = trial_seed(config.master_seed, n, trial);
    let start = Instant::now();
    let (nodes, centers) = sample_instance(domain, &config.split, config.mode, n, seed)?;
    let r_star = match critical_radius(&nodes, &centers, config.method, config.bisection_tol) {
        Ok(res) => Some(res.r_star),
        Err(Error::NeverConnects(_)) => None,
        // Fewer than two vertices in total (Poisson draws can do that).
        Err(Error::InvalidParameter(_)) if nodes.len() + centers.len() < 2 => None,
        Err(e) => return Err(e),
    };
    let wall_time_ms = config
        .record_wall_time
        .then(|| start.elapsed().as_secs_f64() * 1e3);
    Ok(TrialRecord {
        n,
        trial_index: trial,
        seed,
        n1: nodes.len(),
        n2: centers.len(),
        r_star,
        method: config.method,
        wall_time_ms,
    })
}

fn aggregate(n: u64, records: &[TrialRecord]) -> LevelAggregate {
    let never = records.iter().filter(|r| r.r_star.is_none()).count() as u64;
    let values: Vec<f64> = records.iter().filter_map(|r| r.r_star).collect();
    let (mean_r, min_r, max_r) = if never == 0 && !values.is_empty() {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (Some(mean), Some(min), Some(max))
    } else {
        (None, None, None)
    };
    LevelAggregate {
        n,
        trials: records.len() as u64,
        mean_r,
        min_r,
        max_r,
        never_connects: never,
    }
}

fn fit_column(
    aggs: &[LevelAggregate],
    pick: impl Fn(&LevelAggregate) -> Option<f64>,
) -> Option<SlopeFit> {
    let pts: Vec<(f64, f64)> = aggs
        .iter()
        .filter(|a| a.is_complete())
        .filter_map(|a| pick(a).map(|r| (a.n as f64, r)))
        .collect();
    fit_slope(&pts).ok()
}

/// Runs every (n, trial) pair on the current rayon pool and aggregates.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let domain = Domain::unit_cube(config.d)?;
    let jobs: Vec<(u64, u64)> = config
        .n_values
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(n, t)| run_trial(config, &domain, n, t))
        .collect::<Result<Vec<_>>>()?;

    let aggregates: Vec<LevelAggregate> = trials
        .chunks(config.trials as usize)
        .map(|chunk| aggregate(chunk[0].n, chunk))
        .collect();
    let never_connects = aggregates.iter().map(|a| a.never_connects).sum();
    for a in aggregates.iter().filter(|a| a.never_connects > 0) {
        log::warn!(
            "n = {}: {} of {} trials never connect; level excluded from aggregates",
            a.n,
            a.never_connects,
            a.trials
        );
    }
    Ok(SweepResult {
        slope_fit: fit_column(&aggregates, |a| a.mean_r),
        min_slope_fit: fit_column(&aggregates, |a| a.min_r),
        max_slope_fit: fit_column(&aggregates, |a| a.max_r),
        config: config.clone(),
        aggregates,
        never_connects,
        trials,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Trial CSV: `n,trial,seed,n1,n2,r_star,method,wall_time_ms`. A trial that
/// never connects has `r_star = never_connects`; wall time is empty unless
/// recorded.
pub fn write_trials_csv<W: Write>(trials: &[TrialRecord], mut w: W) -> Result<()> {
    writeln!(w, "n,trial,seed,n1,n2,r_star,method,wall_time_ms")?;
    for t in trials {
        let r = t
            .r_star
            .map(|x| x.to_string())
            .unwrap_or_else(|| "never_connects".into());
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            t.n,
            t.trial_index,
            t.seed,
            t.n1,
            t.n2,
            r,
            t.method.as_str(),
            opt(t.wall_time_ms)
        )?;
    }
    Ok(())
}

/// Aggregate CSV: `n,mean_r,min_r,max_r,trials`; aborted levels leave the
/// statistics empty.
pub fn write_aggregates_csv<W: Write>(aggs: &[LevelAggregate], mut w: W) -> Result<()> {
    writeln!(w, "n,mean_r,min_r,max_r,trials")?;
    for a in aggs {
        writeln!(
            w,
            "{},{},{},{},{}",
            a.n,
            opt(a.mean_r),
            opt(a.min_r),
            opt(a.max_r),
            a.trials
        )?;
    }
    Ok(())
}

/// Wilson score interval at 95% for `k` successes out of `m`.
pub fn binomial_ci95(k: u64, m: u64) -> (f64, f64) {
    if m == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let (kf, mf) = (k as f64, m as f64);
    let p = kf / mf;
    let denom = 1.0 + z * z / mf;
    let center = (p + z * z / (2.0 * mf)) / denom;
    let half = z * (p * (1.0 - p) / mf + z * z / (4.0 * mf * mf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub n: u64,
    /// Strong-bound radius; connectivity is tested at `2r`.
    pub r: f64,
    pub trials: u64,
    pub covered: u64,
    pub connected: u64,
    /// Trials with coverage but a disconnected graph at `2r`.
    pub violations: u64,
}

impl ValidationRow {
    pub fn coverage_fraction(&self) -> f64 {
        self.covered as f64 / self.trials as f64
    }

    pub fn connected_fraction(&self) -> f64 {
        self.connected as f64 / self.trials as f64
    }
}

/// For each `n`: radius `r` from the strong bound, Poisson node and center
/// processes, then how often every coverage region is hit, how often the
/// graph at `2r` is connected, and how often the first holds without the
/// second.
pub fn theorem_validation_with(
    domain: &Domain,
    params: &TheoryParams,
    n_values: &[u64],
    trials: u64,
    seed: u64,
) -> Result<Vec<ValidationRow>> {
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("n_values must be strictly increasing");
    }
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let opts = ConnectivityOptions::default();
    n_values
        .iter()
        .map(|&n| {
            let r = radius_strong(n, params)?;
            let grid = build_coverage_grid(domain, r, params)?;
            let outcomes = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let (a, b) =
                        sample_poisson_pair(domain, &params.split, n, trial_seed(seed, n, t))?;
                    let covered = coverage_holds(&grid, &a, &b);
                    let connected = connected_at(&a, &b, 2.0 * r, opts)?;
                    Ok((covered, connected))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ValidationRow {
                n,
                r,
                trials,
                covered: outcomes.iter().filter(|o| o.0).count() as u64,
                connected: outcomes.iter().filter(|o| o.1).count() as u64,
                violations: outcomes.iter().filter(|o| o.0 && !o.1).count() as u64,
            })
        })
        .collect()
}

/// [`theorem_validation_with`] on the unit cube with default parameters.
pub fn theorem_validation(
    n_values: &[u64],
    d: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<ValidationRow>> {
    theorem_validation_with(
        &Domain::unit_cube(d)?,
        &TheoryParams::unit_cube(d),
        n_values,
        trials,
        seed,
    )
}

/// Connectivity fraction non-decreasing in `n` up to binomial noise: each
/// level's upper 95% bound reaches the previous level's lower bound.
pub fn connectivity_trend_ok(rows: &[ValidationRow]) -> bool {
    rows.windows(2).all(|w| {
        let (prev_lo, _) = binomial_ci95(w[0].connected, w[0].trials);
        let (_, next_hi) = binomial_ci95(w[1].connected, w[1].trials);
        next_hi >= prev_lo
    })
}

pub fn write_validation_csv<W: Write>(rows: &[ValidationRow], mut w: W) -> Result<()> {
    writeln!(
        w,
        "n,r,trials,coverage_fraction,connected_fraction,violations"
    )?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.n,
            row.r,
            row.trials,
            row.coverage_fraction(),
            row.connected_fraction(),
            row.violations
        )?;
    }
    Ok(())
}
