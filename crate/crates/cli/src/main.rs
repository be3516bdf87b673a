#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use geohyper::experiments::{
    linear_spaced, log_spaced, sample_instance, theorem_validation_with, write_aggregates_csv,
    write_trials_csv, write_validation_csv,
};
use geohyper::geometry::Density;
use geohyper::plot::sweep_svg;
use geohyper::seeding::trial_seed;
use geohyper::theory::{default_c, GrowthFn};
use geohyper::threshold::critical_radius;
use geohyper::{
    build_bipartite, radius_strong, radius_weak, run_sweep, BoxRegion, ConnectivityOptions, Domain,
    Error, Method, Point, PointSample, Result, SampleMode, Split, SweepConfig, TheoryParams,
};

#[derive(Parser, Debug)]
#[command(
    name = "geohyper",
    version,
    about = "Random geometric hypergraphs: generation, critical radius, sweeps and coverage bounds"
)]
struct Cli {
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample nodes and centers, build the graph at a radius and write it out.
    Generate(GenerateArgs),
    /// Compute the critical radius of one instance and print it as JSON.
    Critical(CriticalArgs),
    /// Monte Carlo sweep of the critical radius over n.
    Sweep(SweepArgs),
    /// Print the weak and strong coverage radii as JSON.
    Theory(TheoryArgs),
    /// Check that coverage at r implies connectivity at 2r.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Spacing {
    Log,
    Linear,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Total size n = n1 + n2 (a count, or the total intensity in Poisson mode).
    #[arg(long, default_value_t = 1000)]
    n: u64,
    /// Node fraction; centers get the rest.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    /// Connection radius; a node joins a center when strictly closer than this.
    #[arg(long, default_value_t = 0.1)]
    radius: f64,
    /// Master seed; a random one is chosen and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "generated")]
    out: PathBuf,
    /// Hypergraph file format.
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
    #[arg(long, default_value = "fixed", value_parser = parse_mode)]
    mode: SampleMode,
    /// Leave centers without members out of the connectivity check.
    #[arg(long, default_value_t = false)]
    ignore_empty_centers: bool,
}

#[derive(Args, Debug)]
struct CriticalArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 1000)]
    n: u64,
    /// Node fraction; centers get the rest.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    /// Master seed; a random one is chosen and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// exact (bottleneck edge) or bisection.
    #[arg(long, default_value = "exact", value_parser = parse_method)]
    method: Method,
    /// Absolute bisection tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value = "fixed", value_parser = parse_mode)]
    mode: SampleMode,
    /// JSON file {"nodes": [[..], ..], "centers": [[..], ..]} used instead of sampling.
    #[arg(long)]
    points_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// JSON file with any subset of the sweep fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimension [default: 2]
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated n values, e.g. 1000,2000,5000 [default: 8 log-spaced in 1000..=10000]
    #[arg(long, value_delimiter = ',')]
    n_values: Option<Vec<u64>>,
    /// Smallest n of a generated range [default: 1000]
    #[arg(long)]
    n_min: Option<u64>,
    /// Largest n of a generated range [default: 10000]
    #[arg(long)]
    n_max: Option<u64>,
    /// Number of n values in a generated range [default: 8]
    #[arg(long)]
    n_count: Option<usize>,
    /// Spacing of a generated range [default: log]
    #[arg(long, value_enum)]
    spacing: Option<Spacing>,
    /// Trials per n [default: 50]
    #[arg(long)]
    trials: Option<u64>,
    /// Node fraction [default: 0.8]
    #[arg(long)]
    split: Option<f64>,
    /// fixed or poisson [default: fixed]
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SampleMode>,
    /// exact or bisection [default: exact]
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Absolute bisection tolerance [default: 1e-9]
    #[arg(long)]
    tol: Option<f64>,
    /// Master seed [default: random, printed and recorded]
    #[arg(long)]
    seed: Option<u64>,
    /// Record per-trial wall time (makes trial files differ between runs) [default: false]
    #[arg(long)]
    record_wall_time: bool,
    #[arg(long, default_value = "sweep")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TheoryArgs {
    #[arg(long, default_value_t = 10_000)]
    n: u64,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Node fraction; centers get the rest.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    /// Cube constant C [default: 3·sqrt(d), nudged up by 1e-9]
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    f_min: f64,
    /// ε of the strong bound.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// w(n) of the weak bound: loglog, sqrtlog or const:<value>.
    #[arg(long, default_value = "loglog", value_parser = parse_growth)]
    w: GrowthFn,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Comma-separated, strictly increasing n values.
    #[arg(long, value_delimiter = ',', default_value = "1000,3000,10000")]
    n_values: Vec<u64>,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Master seed; a random one is chosen and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV path; a JSON report with the resolved configuration goes next to it.
    #[arg(long, default_value = "validation.csv")]
    out: PathBuf,
}

fn parse_mode(s: &str) -> Result<SampleMode> {
    s.parse()
}

fn parse_method(s: &str) -> Result<Method> {
    s.parse()
}

fn parse_growth(s: &str) -> Result<GrowthFn> {
    s.parse()
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s: u64 = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NeverConnects(_) => 3,
        Error::Io(_) => 4,
        _ => 2,
    }
}

/// Files written by one command, removed again if the command fails.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn discard(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn with_outputs(dir: &Path, f: impl FnOnce(&mut Outputs) -> Result<()>) -> Result<()> {
    let mut out = Outputs::new(dir)?;
    match f(&mut out) {
        Ok(()) => Ok(()),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn print_json(v: &impl Serialize) -> Result<()> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, v)?;
    writeln!(lock)?;
    Ok(())
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    if !(a.radius > 0.0) || !a.radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {}",
            a.radius
        )));
    }
    if a.n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let split = Split::from_node_fraction(a.split)?;
    let domain = Domain::unit_cube(a.d)?;
    let seed = resolve_seed(a.seed);
    let (nodes, centers) = sample_instance(&domain, &split, a.mode, a.n, trial_seed(seed, a.n, 0))?;
    let graph = build_bipartite(nodes, centers, a.radius)?;
    let hyper = graph.to_hypergraph();
    let opts = ConnectivityOptions {
        ignore_empty_centers: a.ignore_empty_centers,
    };
    let report = json!({
        "d": a.d,
        "n": a.n,
        "split": split,
        "radius": a.radius,
        "seed": seed,
        "mode": a.mode,
        "format": format!("{:?}", a.format).to_lowercase(),
        "ignore_empty_centers": a.ignore_empty_centers,
        "n1": graph.node_count(),
        "n2": graph.center_count(),
        "edges": graph.edge_count(),
        "components": graph.component_count_with(opts),
        "connected": graph.is_connected_with(opts),
    });

    with_outputs(&a.out, |out| {
        out.write("nodes.csv", |w| graph.nodes.write_csv(w))?;
        out.write("centers.csv", |w| graph.centers.write_csv(w))?;
        out.write("edges.csv", |w| graph.write_edges_csv(w))?;
        if a.format != Format::Json {
            out.write("hypergraph.txt", |w| hyper.write_text(w))?;
        }
        if a.format != Format::Text {
            out.write("hypergraph.json", |w| {
                Ok(writeln!(w, "{}", hyper.to_json()?)?)
            })?;
        }
        out.write("config.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            Ok(writeln!(w)?)
        })
    })?;
    print_json(&report)
}

#[derive(Deserialize)]
struct PointsFile {
    nodes: Vec<Vec<f64>>,
    centers: Vec<Vec<f64>>,
}

/// Nodes and centers from a points file, in the bounding box of all points.
fn load_points(path: &Path) -> Result<(PointSample, PointSample)> {
    let text = fs::read_to_string(path)?;
    let file: PointsFile = serde_json::from_str(&text)?;
    let all: Vec<&Vec<f64>> = file.nodes.iter().chain(&file.centers).collect();
    let Some(first) = all.first() else {
        return Err(Error::InvalidParameter("points file has no points".into()));
    };
    let d = first.len();
    let mut lower = vec![f64::INFINITY; d];
    let mut upper = vec![f64::NEG_INFINITY; d];
    for p in &all {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
        for (k, &x) in p.iter().enumerate() {
            lower[k] = lower[k].min(x);
            upper[k] = upper[k].max(x);
        }
    }
    for k in 0..d {
        if lower[k] == upper[k] {
            lower[k] -= 0.5;
            upper[k] += 0.5;
        }
    }
    let domain = Domain::new(BoxRegion::new(lower, upper)?, Density::Uniform)?;
    let to_sample = |pts: &[Vec<f64>]| -> Result<PointSample> {
        let points = pts
            .iter()
            .map(|c| Point::new(c.clone()))
            .collect::<Result<Vec<_>>>()?;
        PointSample::from_points(domain.clone(), &points)
    };
    Ok((to_sample(&file.nodes)?, to_sample(&file.centers)?))
}

fn cmd_critical(a: &CriticalArgs) -> Result<()> {
    let (nodes, centers, config) = match &a.points_file {
        Some(path) => {
            let (nodes, centers) = load_points(path)?;
            let config = json!({
                "points_file": path,
                "d": nodes.dim(),
                "n1": nodes.len(),
                "n2": centers.len(),
                "method": a.method,
                "tol": a.tol,
            });
            (nodes, centers, config)
        }
        None => {
            let split = Split::from_node_fraction(a.split)?;
            let domain = Domain::unit_cube(a.d)?;
            let seed = resolve_seed(a.seed);
            let (nodes, centers) =
                sample_instance(&domain, &split, a.mode, a.n, trial_seed(seed, a.n, 0))?;
            let config = json!({
                "d": a.d,
                "n": a.n,
                "split": split,
                "mode": a.mode,
                "seed": seed,
                "n1": nodes.len(),
                "n2": centers.len(),
                "method": a.method,
                "tol": a.tol,
            });
            (nodes, centers, config)
        }
    };
    let result = critical_radius(&nodes, &centers, a.method, a.tol)?;
    print_json(&json!({
        "config": config,
        "r_star": result.r_star,
        "method": result.method,
        "iterations": result.iterations,
        "certificate": result.certificate,
    }))
}

/// Defaults, then the config file, then flags.
fn resolve_sweep_config(a: &SweepArgs) -> Result<SweepConfig> {
    let file: serde_json::Map<String, Value> = match &a.config {
        Some(path) => match serde_json::from_str(&fs::read_to_string(path)?)? {
            Value::Object(m) => m,
            _ => {
                return Err(Error::Parse(format!(
                    "{} must hold a JSON object",
                    path.display()
                )))
            }
        },
        None => Default::default(),
    };
    let d = match (a.d, file.get("d")) {
        (Some(d), _) => d,
        (None, Some(v)) => serde_json::from_value(v.clone())?,
        (None, None) => 2,
    };
    let seed_in_file = file.contains_key("master_seed");
    let mut merged = serde_json::to_value(SweepConfig::desk_scale(d, 0))?;
    if let Value::Object(m) = &mut merged {
        m.extend(file);
    }
    let mut cfg: SweepConfig = serde_json::from_value(merged)?;
    cfg.d = d;

    if let Some(ns) = &a.n_values {
        cfg.n_values = ns.clone();
    } else if a.n_min.is_some() || a.n_max.is_some() || a.n_count.is_some() || a.spacing.is_some() {
        let lo = a.n_min.unwrap_or(1_000);
        let hi = a.n_max.unwrap_or(10_000);
        let count = a.n_count.unwrap_or(8);
        cfg.n_values = match a.spacing.unwrap_or(Spacing::Log) {
            Spacing::Log => log_spaced(lo, hi, count),
            Spacing::Linear => linear_spaced(lo, hi, count),
        };
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(f) = a.split {
        cfg.split = Split::from_node_fraction(f)?;
    }
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    if let Some(m) = a.method {
        cfg.method = m;
    }
    if let Some(t) = a.tol {
        cfg.bisection_tol = t;
    }
    if a.record_wall_time {
        cfg.record_wall_time = true;
    }
    cfg.master_seed = match a.seed {
        Some(s) => s,
        None if seed_in_file => cfg.master_seed,
        None => resolve_seed(None),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_sweep(a: &SweepArgs) -> Result<()> {
    let cfg = resolve_sweep_config(a)?;
    log::info!(
        "sweep d={} n={:?} trials={} seed={}",
        cfg.d,
        cfg.n_values,
        cfg.trials,
        cfg.master_seed
    );
    let result = run_sweep(&cfg)?;
    if result.never_connects > 0 {
        eprintln!(
            "warning: {} trials never connect; their levels are left out of the fits",
            result.never_connects
        );
    }
    with_outputs(&a.out, |out| {
        out.write("trials.csv", |w| write_trials_csv(&result.trials, w))?;
        out.write("aggregates.csv", |w| {
            write_aggregates_csv(&result.aggregates, w)
        })?;
        out.write("result.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &result)?;
            Ok(writeln!(w)?)
        })?;
        out.write("plot.svg", |w| {
            Ok(w.write_all(sweep_svg(&result).as_bytes())?)
        })
    })?;
    print_json(&json!({
        "out": a.out,
        "master_seed": cfg.master_seed,
        "slope_fit": result.slope_fit,
        "never_connects": result.never_connects,
    }))
}

fn cmd_theory(a: &TheoryArgs) -> Result<()> {
    let split = Split::from_node_fraction(a.split)?;
    let c = a.c.unwrap_or_else(|| default_c(a.d));
    let p = TheoryParams::new(a.d, split, c, a.f_min, a.epsilon, a.w)?;
    print_json(&json!({
        "config": {
            "n": a.n,
            "d": a.d,
            "split": split,
            "c": c,
            "f_min": a.f_min,
            "epsilon": a.epsilon,
            "w": a.w.to_string(),
        },
        "weak": radius_weak(a.n, &p)?,
        "strong": radius_strong(a.n, &p)?,
        "k": p.k(),
        "gamma": p.gamma(),
        "c": c,
    }))
}

fn cmd_validate(a: &ValidateArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    let domain = Domain::unit_cube(a.d)?;
    let params = TheoryParams::unit_cube(a.d);
    let rows = theorem_validation_with(&domain, &params, &a.n_values, a.trials, seed)?;

    println!(
        "{:>8}  {:>10}  {:>7}  {:>9}  {:>9}  {:>10}",
        "n", "r", "trials", "covered", "connected", "violations"
    );
    for r in &rows {
        println!(
            "{:>8}  {:>10.6}  {:>7}  {:>9.3}  {:>9.3}  {:>10}",
            r.n,
            r.r,
            r.trials,
            r.coverage_fraction(),
            r.connected_fraction(),
            r.violations
        );
    }
    let violations: u64 = rows.iter().map(|r| r.violations).sum();
    if violations > 0 {
        eprintln!("warning: {violations} trials covered but disconnected at 2r");
    }

    let dir = match a.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let csv_name = a
        .out
        .file_name()
        .ok_or_else(|| Error::InvalidParameter("--out needs a file name".into()))?
        .to_string_lossy()
        .into_owned();
    let json_name = Path::new(&csv_name).with_extension("json");
    let report = json!({
        "config": {
            "n_values": a.n_values,
            "d": a.d,
            "trials": a.trials,
            "seed": seed,
            "params": params,
        },
        "rows": rows,
    });
    with_outputs(&dir, |out| {
        out.write(&csv_name, |w| write_validation_csv(&rows, w))?;
        out.write(&json_name.to_string_lossy(), |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            Ok(writeln!(w)?)
        })
    })
}

fn run(cli: &Cli) -> Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Critical(a) => cmd_critical(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
