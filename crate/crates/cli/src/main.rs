//! Command-line driver: exact solves, principal-component estimates,
//! experiment sweeps, and a brute-force cross-check.
//!
//! Exit codes: 0 success, 2 finished but not converged to tolerance,
//! 1 any other error.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use spca_core::estimator::{estimate_from_result, write_estimate_csv};
use spca_core::experiments::{run_experiment, write_outputs, ExperimentConfig, Method, Scenario};
use spca_core::model::{make_model, sample_data, sin_angle, Dataset, SpikedModel};
use spca_core::outer::{solve_logged, LambdaMode, SolveResult, SolverConfig};
use spca_core::qp::evaluate_f;

#[derive(Parser)]
#[command(
    name = "spca",
    version,
    about = "Sparse principal component estimation via exact sparse regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exact solver; per-iteration progress goes to stdout as
    /// tab-separated (iter, upper, lower, gap, seconds, support)
    Solve(SolveArgs),
    /// Solve and post-process into a unit principal-component estimate
    /// (CSV columns index,u_hat,sigma_hat_sq,in_support)
    Estimate(SolveArgs),
    /// Run a seeded sweep over (n, s) grids and write metric + summary CSVs
    Experiment(ExperimentArgs),
    /// Cross-check the solver against exhaustive support enumeration
    BruteforceCheck(BruteforceArgs),
}

/// Flags shared by `solve` and `estimate`. Any flag may also appear in a
/// `key=value` config file; explicit flags win.
#[derive(Args, Clone)]
struct SolveArgs {
    /// Dimension of the synthetic model (ignored with --data)
    #[arg(long)]
    p: Option<usize>,
    /// Sample size of the synthetic model (ignored with --data)
    #[arg(long)]
    n: Option<usize>,
    /// Cardinality budget for the selection
    #[arg(long)]
    s: Option<usize>,
    /// Spike strength of the synthetic model, in (0, 1]
    #[arg(long)]
    theta: Option<f64>,
    /// Relative optimality-gap target
    #[arg(long)]
    tol: Option<f64>,
    /// Wall-clock budget in seconds; 0 disables the limit
    #[arg(long = "time-limit")]
    time_limit: Option<f64>,
    /// Ridge weight: "zero", "heuristic", or an explicit value
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on outer iterations
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Read observations from a headerless CSV instead of sampling
    #[arg(long)]
    data: Option<PathBuf>,
    /// Where to write the result CSV (solve: iteration trace; estimate:
    /// component estimate); stdout for estimate when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report all elapsed times as zero so repeated runs are byte-identical
    #[arg(long = "no-timing")]
    no_timing: bool,
    /// key=value file supplying defaults for any of these flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// One of vary_n, vary_s, gap_bench, compare
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    p: Option<usize>,
    /// Comma-separated sample-size grid
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated sparsity grid
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of mip, mip-ridge, truncated-power,
    /// cov-threshold; empty means the scenario default
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "time-limit")]
    time_limit: Option<f64>,
    /// Ridge weight for the plain mip method
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Threshold scale for covariance thresholding
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory for <scenario>.csv and summary.csv
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "no-timing")]
    no_timing: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BruteforceArgs {
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Ridge weight: "zero", "heuristic", or an explicit value
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    let outcome = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Experiment(args) => run_sweep(args),
        Command::BruteforceCheck(args) => run_bruteforce_check(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// SPCA_THREADS caps the worker pool; unset means the rayon default.
fn configure_threads() -> Result<()> {
    match std::env::var("SPCA_THREADS") {
        Ok(v) => {
            let k: usize = v
                .trim()
                .parse()
                .context("SPCA_THREADS must be a positive integer")?;
            if k == 0 {
                bail!("SPCA_THREADS must be positive");
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .context("building the worker pool")?;
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

/// key=value lines; blank lines and #-comments are skipped.
fn load_config(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected key=value", path.display(), lineno + 1))?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

struct Merged {
    map: HashMap<String, String>,
}

impl Merged {
    fn new(config: Option<&PathBuf>) -> Result<Self> {
        let map = match config {
            Some(path) => load_config(path)?,
            None => HashMap::new(),
        };
        Ok(Merged { map })
    }

    /// CLI value if present, else the config-file value, else the default.
    fn get<T: FromStr + Clone>(&self, key: &str, cli: Option<T>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.map.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| anyhow::anyhow!("config key {key}={raw}: {e}")),
            None => Ok(default),
        }
    }

    fn get_opt<T: FromStr>(&self, key: &str, cli: Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.map.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key}={raw}: {e}")),
            None => Ok(None),
        }
    }

    fn get_flag(&self, key: &str, cli: bool) -> Result<bool> {
        if cli {
            return Ok(true);
        }
        match self.map.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| anyhow::anyhow!("config key {key}={raw}: {e}")),
            None => Ok(false),
        }
    }
}

fn parse_lambda(raw: &str) -> Result<LambdaMode> {
    match raw {
        "zero" => Ok(LambdaMode::Zero),
        "heuristic" => Ok(LambdaMode::Heuristic),
        other => {
            let value: f64 = other
                .parse()
                .map_err(|_| anyhow::anyhow!("--lambda expects zero, heuristic, or a number"))?;
            if value < 0.0 {
                bail!("--lambda must be nonnegative");
            }
            Ok(LambdaMode::Explicit(value))
        }
    }
}

fn parse_grid(raw: &str, what: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .with_context(|| format!("bad {what} entry {tok:?}"))
        })
        .collect()
}

struct ResolvedSolve {
    data: Dataset,
    model: Option<SpikedModel>,
    solver: SolverConfig,
    mode: LambdaMode,
    out: Option<PathBuf>,
}

fn resolve_solve(args: &SolveArgs) -> Result<ResolvedSolve> {
    let merged = Merged::new(args.config.as_ref())?;
    let p = merged.get("p", args.p, 50)?;
    let n = merged.get("n", args.n, 500)?;
    let s = merged.get("s", args.s, 3)?;
    let theta = merged.get("theta", args.theta, 1.0)?;
    let tol = merged.get("tol", args.tol, 1e-4)?;
    let time_limit = merged.get("time-limit", args.time_limit, 300.0)?;
    let seed = merged.get("seed", args.seed, 0)?;
    let max_iters = merged.get("max-iters", args.max_iters, 500)?;
    let lambda_raw = merged.get("lambda", args.lambda.clone(), "zero".to_string())?;
    let no_timing = merged.get_flag("no-timing", args.no_timing)?;
    let data_path = merged.get_opt("data", args.data.clone())?;
    let out = merged.get_opt("out", args.out.clone())?;

    let (data, model) = match data_path {
        Some(path) => {
            let file = std::fs::File::open(&path)
                .with_context(|| format!("opening {}", path.display()))?;
            let data = Dataset::read_csv(file).context("parsing data CSV")?;
            (data, None)
        }
        None => {
            let model = make_model(p, s, theta, seed).context("building the planted model")?;
            let data = sample_data(&model, n, seed.wrapping_add(1)).context("sampling data")?;
            (data, Some(model))
        }
    };
    let solver = SolverConfig {
        s,
        tol,
        time_limit: (time_limit > 0.0).then_some(time_limit),
        max_iters,
        seed,
        timing: !no_timing,
        ..SolverConfig::default()
    };
    Ok(ResolvedSolve {
        data,
        model,
        solver,
        mode: parse_lambda(&lambda_raw)?,
        out,
    })
}

fn run_solver(resolved: &ResolvedSolve, log: &mut dyn Write) -> Result<SolveResult> {
    solve_logged(&resolved.data, &resolved.solver, resolved.mode, log).context("solver failed")
}

fn run_solve(args: SolveArgs) -> Result<bool> {
    let resolved = resolve_solve(&args)?;
    let mut stdout = std::io::stdout().lock();
    let result = run_solver(&resolved, &mut stdout)?;
    drop(stdout);

    eprintln!(
        "status: {} after {} iterations, value {:.9e}, bound {:.9e}, gap {:.3e}, lambda {}",
        if result.converged {
            "converged"
        } else {
            "not converged"
        },
        result.iterations,
        result.upper_bound,
        result.lower_bound,
        result.gap,
        result.lambda,
    );
    eprintln!("support: {:?}", result.support());

    if let Some(path) = &resolved.out {
        let mut w = outfile::create(path)?;
        w.write_all(b"iter,upper_bound,lower_bound,gap,elapsed_seconds,support\n")?;
        for rec in &result.trace {
            let support = rec
                .support
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(";");
            writeln!(
                w,
                "{},{},{},{},{},{}",
                rec.iter, rec.upper_bound, rec.lower_bound, rec.gap, rec.elapsed, support
            )?;
        }
        w.flush()?;
        eprintln!("trace written to {}", path.display());
    }
    Ok(result.converged)
}

mod outfile {
    use super::*;
    use std::io::BufWriter;

    /// File writer that creates missing parent directories first.
    pub fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
        }
        let file =
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }
}

fn run_estimate(args: SolveArgs) -> Result<bool> {
    let resolved = resolve_solve(&args)?;
    let mut stderr = std::io::stderr().lock();
    let result = run_solver(&resolved, &mut stderr)?;
    drop(stderr);

    let est = estimate_from_result(&resolved.data, &result, resolved.solver.seed)
        .context("post-processing failed")?;
    eprintln!(
        "status: {}, gap {:.3e}, support {:?}, power iterations {}",
        if result.converged {
            "converged"
        } else {
            "not converged"
        },
        result.gap,
        est.support,
        est.power_iters_used
    );
    if let Some(model) = &resolved.model {
        let angle = sin_angle(
            est.u_hat.as_slice().expect("contiguous"),
            model.u_star.as_slice().expect("contiguous"),
        )
        .context("angle against the planted direction")?;
        eprintln!("sin angle to the planted direction: {angle:.6}");
    }

    match &resolved.out {
        Some(path) => {
            let w = outfile::create(path)?;
            write_estimate_csv(&est, w).context("writing the estimate")?;
            eprintln!("estimate written to {}", path.display());
        }
        None => {
            write_estimate_csv(&est, std::io::stdout().lock()).context("writing the estimate")?;
        }
    }
    Ok(result.converged)
}

fn run_sweep(args: ExperimentArgs) -> Result<bool> {
    let merged = Merged::new(args.config.as_ref())?;
    let scenario_raw = merged.get("scenario", args.scenario.clone(), "compare".to_string())?;
    let scenario: Scenario = scenario_raw.parse().map_err(|e| anyhow::anyhow!("{e}"))?;
    let p = merged.get("p", args.p, 50)?;
    let n_raw = merged.get("n", args.n.clone(), "500".to_string())?;
    let s_raw = merged.get("s", args.s.clone(), "3".to_string())?;
    let theta = merged.get("theta", args.theta, 1.0)?;
    let reps = merged.get("reps", args.reps, 10)?;
    let seed = merged.get("seed", args.seed, 0)?;
    let tol = merged.get("tol", args.tol, 1e-4)?;
    let time_limit = merged.get("time-limit", args.time_limit, 300.0)?;
    let max_iters = merged.get("max-iters", args.max_iters, 500)?;
    let lambda_raw = merged.get("lambda", args.lambda.clone(), "zero".to_string())?;
    let alpha = merged.get("alpha", args.alpha, 2.0)?;
    let out = merged.get("out", args.out.clone(), PathBuf::from("results"))?;
    let no_timing = merged.get_flag("no-timing", args.no_timing)?;
    let methods_raw = merged.get_opt("methods", args.methods.clone())?;

    let methods: Vec<Method> = match methods_raw {
        Some(raw) => raw
            .split(',')
            .map(|tok| tok.trim().parse().map_err(|e| anyhow::anyhow!("{e}")))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };

    let cfg = ExperimentConfig {
        scenario,
        p,
        n_grid: parse_grid(&n_raw, "--n")?,
        s_grid: parse_grid(&s_raw, "--s")?,
        theta,
        replications: reps,
        seed,
        methods,
        solver: SolverConfig {
            tol,
            time_limit: (time_limit > 0.0).then_some(time_limit),
            max_iters,
            timing: !no_timing,
            ..SolverConfig::default()
        },
        lambda_mode: parse_lambda(&lambda_raw)?,
        alpha,
        output_dir: out,
    };
    let rows = run_experiment(&cfg).context("experiment sweep failed")?;
    let paths = write_outputs(&cfg, &rows).context("writing experiment outputs")?;
    for path in &paths {
        eprintln!("wrote {}", path.display());
    }
    let unconverged = rows.iter().filter(|r| !r.converged).count();
    if unconverged > 0 {
        eprintln!("{unconverged} of {} rows did not converge", rows.len());
    }
    Ok(unconverged == 0)
}

fn run_bruteforce_check(args: BruteforceArgs) -> Result<bool> {
    let merged = Merged::new(args.config.as_ref())?;
    let p = merged.get("p", args.p, 10)?;
    let n = merged.get("n", args.n, 60)?;
    let s = merged.get("s", args.s, 2)?;
    let theta = merged.get("theta", args.theta, 1.0)?;
    let seed = merged.get("seed", args.seed, 0)?;
    let lambda_raw = merged.get("lambda", args.lambda.clone(), "zero".to_string())?;
    if p > 16 {
        bail!("enumeration is limited to p <= 16 (got {p})");
    }

    let model = make_model(p, s, theta, seed).context("building the planted model")?;
    let data = sample_data(&model, n, seed.wrapping_add(1)).context("sampling data")?;
    let solver = SolverConfig {
        s,
        tol: 0.0,
        time_limit: None,
        seed,
        ..SolverConfig::default()
    };
    let mode = parse_lambda(&lambda_raw)?;
    let mut sink = std::io::sink();
    let result = solve_logged(&data, &solver, mode, &mut sink).context("solver failed")?;

    let sub = spca_core::qp::SubproblemConfig {
        lambda: result.lambda,
        ..Default::default()
    };
    let mut best = f64::INFINITY;
    let mut best_support: Vec<usize> = Vec::new();
    for mask in 0u32..(1 << p) {
        if (mask.count_ones() as usize) > s {
            continue;
        }
        let z: Vec<bool> = (0..p).map(|i| mask >> i & 1 == 1).collect();
        let value = evaluate_f(&data, &z, &sub)
            .context("enumeration oracle")?
            .value;
        if value < best {
            best = value;
            best_support = (0..p).filter(|&i| z[i]).collect();
        }
    }

    let rel = (result.upper_bound - best).abs() / best.abs().max(1e-12);
    println!("solver value       {:.12e}", result.upper_bound);
    println!("enumeration value  {best:.12e}");
    println!("relative gap       {rel:.3e}");
    println!("solver support     {:?}", result.support());
    println!("enumeration support {best_support:?}");
    if rel <= 1e-6 {
        println!("AGREE");
        Ok(true)
    } else {
        println!("DISAGREE");
        bail!("solver and enumeration differ by {rel:.3e} relative")
    }
}
