//! Outer-approximation loop: evaluate the oracle at binary anchors, grow a
//! cut pool, solve the master exactly, and track the upper/lower bounds until
//! the relative optimality gap closes. Also houses the variance-screening
//! initializer and the data-driven ridge weight.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use ndarray::Array2;

use crate::error::{Result, SpcaError};
use crate::master::{solve_master, Cut, MasterProblem};
use crate::model::Dataset;
use crate::qp::{
    evaluate_f, precompute_cross_products, solve_column_qp, subgradient, ColumnSolution,
    SubproblemConfig,
};

/// How the ridge weight is chosen for the main solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    Zero,
    Heuristic,
    Explicit(f64),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Cardinality cap on the support.
    pub s: usize,
    /// Target relative optimality gap in [0, 1).
    pub tol: f64,
    /// Wall-clock budget in seconds, checked between iterations.
    pub time_limit: Option<f64>,
    /// Cut-count cap.
    pub max_iters: usize,
    pub sub: SubproblemConfig,
    pub seed: u64,
    pub node_budget: usize,
    pub dual_iters: usize,
    /// When false the clock is never read: elapsed fields are recorded as 0
    /// and time limits are ignored, so repeated runs byte-match.
    pub timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            s: 1,
            tol: 1e-4,
            time_limit: Some(300.0),
            max_iters: 500,
            sub: SubproblemConfig::default(),
            seed: 0,
            node_budget: 200_000,
            dual_iters: 50,
            timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterRecord {
    pub iter: usize,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub elapsed: f64,
    /// Sorted support of the incumbent after this iteration.
    pub support: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub z_hat: Vec<bool>,
    /// p x p coefficient matrix, zero diagonal, column j holding the
    /// regression of column j on the rest of the support.
    pub beta_hat: Array2<f64>,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub trace: Vec<IterRecord>,
    pub converged: bool,
    /// Ridge weight actually used.
    pub lambda: f64,
}

impl SolveResult {
    pub fn support(&self) -> Vec<usize> {
        (0..self.z_hat.len()).filter(|&v| self.z_hat[v]).collect()
    }
}

/// Indices of the k largest sample variances, ties to the smaller index,
/// returned in ascending index order.
pub fn diagonal_thresholding(data: &Dataset, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..data.p).collect();
    idx.sort_by(|&a, &b| {
        data.col_variance(b)
            .total_cmp(&data.col_variance(a))
            .then(a.cmp(&b))
    });
    idx.truncate(k.min(data.p));
    idx.sort_unstable();
    idx
}

/// Screens to the 3s highest-variance columns, then runs a budget-capped
/// outer-approximation solve restricted to that set. Returns a feasible
/// starting support.
pub fn initialize(data: &Dataset, cfg: &SolverConfig) -> Result<Vec<bool>> {
    validate(data, cfg)?;
    let screened = diagonal_thresholding(data, 3 * cfg.s);
    let top = diagonal_thresholding(data, cfg.s);
    let mut in_screen = vec![false; data.p];
    for &v in &screened {
        in_screen[v] = true;
    }
    let forced_zero: Vec<usize> = (0..data.p).filter(|&v| !in_screen[v]).collect();
    let mut z0 = vec![false; data.p];
    for &v in &top {
        z0[v] = true;
    }
    let params = RunParams {
        s: cfg.s,
        tol: cfg.tol,
        max_iters: INIT_MAX_ITERS,
        sub: SubproblemConfig {
            lambda: 0.0,
            ..cfg.sub.clone()
        },
        node_budget: cfg.node_budget,
        dual_iters: cfg.dual_iters,
        forced_zero,
        clock: Clock::new(cfg.timing, Some(INIT_TIME_LIMIT)),
    };
    let outcome = run_outer(data, params, z0, &mut None)?;
    Ok(outcome.best_z)
}

const INIT_MAX_ITERS: usize = 25;
const INIT_TIME_LIMIT: f64 = 10.0;

/// Ridge weight from the starting support: 0.1 times the total squared
/// residual of the lambda = 0 fit over the total squared coefficient mass,
/// with 0/0 read as 0.
pub fn lambda_heuristic(data: &Dataset, z0: &[bool], sub: &SubproblemConfig) -> Result<f64> {
    if z0.len() != data.p {
        return Err(SpcaError::InvalidParameter(
            "z0 length does not match the data".into(),
        ));
    }
    let support: Vec<usize> = (0..data.p).filter(|&j| z0[j]).collect();
    let cfg0 = SubproblemConfig {
        lambda: 0.0,
        ..sub.clone()
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, &selected) in z0.iter().enumerate() {
        if selected {
            let sol = solve_column_qp(data, j, &support, &cfg0)?;
            num += sol.residual.dot(&sol.residual);
            den += sol.beta_col.dot(&sol.beta_col);
        } else {
            num += data.col_sq_norm(j);
        }
    }
    if den == 0.0 {
        Ok(0.0)
    } else {
        Ok(0.1 * num / den)
    }
}

/// Full pipeline: initialize, pick lambda, run the outer loop to the target
/// gap or budget.
pub fn solve(data: &Dataset, cfg: &SolverConfig, mode: LambdaMode) -> Result<SolveResult> {
    solve_impl(data, cfg, mode, &mut None)
}

/// As [`solve`], streaming one tab-separated progress line per iteration:
/// iter, UB, LB, gap, elapsed seconds, incumbent support.
pub fn solve_logged(
    data: &Dataset,
    cfg: &SolverConfig,
    mode: LambdaMode,
    log: &mut dyn Write,
) -> Result<SolveResult> {
    let mut sink: Option<&mut dyn Write> = Some(log);
    solve_impl(data, cfg, mode, &mut sink)
}

/// As [`solve`] but starting from a caller-provided support instead of the
/// screening initializer.
pub fn solve_from_start(
    data: &Dataset,
    cfg: &SolverConfig,
    mode: LambdaMode,
    z0: &[bool],
) -> Result<SolveResult> {
    validate(data, cfg)?;
    if z0.len() != data.p || z0.iter().filter(|v| **v).count() > cfg.s {
        return Err(SpcaError::InvalidParameter(
            "starting point is infeasible".into(),
        ));
    }
    let lambda = resolve_lambda(data, cfg, mode, z0)?;
    finish_solve(
        data,
        cfg,
        lambda,
        z0.to_vec(),
        &mut None,
        Clock::new(cfg.timing, cfg.time_limit),
    )
}

fn solve_impl(
    data: &Dataset,
    cfg: &SolverConfig,
    mode: LambdaMode,
    log: &mut Option<&mut dyn Write>,
) -> Result<SolveResult> {
    validate(data, cfg)?;
    let clock = Clock::new(cfg.timing, cfg.time_limit);
    let z0 = initialize(data, cfg)?;
    let lambda = resolve_lambda(data, cfg, mode, &z0)?;
    finish_solve(data, cfg, lambda, z0, log, clock)
}

fn resolve_lambda(
    data: &Dataset,
    cfg: &SolverConfig,
    mode: LambdaMode,
    z0: &[bool],
) -> Result<f64> {
    match mode {
        LambdaMode::Zero => Ok(0.0),
        LambdaMode::Explicit(v) => {
            if v < 0.0 || !v.is_finite() {
                Err(SpcaError::InvalidParameter(format!(
                    "lambda must be finite and >= 0, got {v}"
                )))
            } else {
                Ok(v)
            }
        }
        LambdaMode::Heuristic => lambda_heuristic(data, z0, &cfg.sub),
    }
}

fn finish_solve(
    data: &Dataset,
    cfg: &SolverConfig,
    lambda: f64,
    z0: Vec<bool>,
    log: &mut Option<&mut dyn Write>,
    clock: Clock,
) -> Result<SolveResult> {
    let params = RunParams {
        s: cfg.s,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        sub: SubproblemConfig {
            lambda,
            ..cfg.sub.clone()
        },
        node_budget: cfg.node_budget,
        dual_iters: cfg.dual_iters,
        forced_zero: Vec::new(),
        clock,
    };
    let outcome = run_outer(data, params, z0, log)?;

    let mut beta_hat = Array2::zeros((data.p, data.p));
    for col in &outcome.best_columns {
        beta_hat.column_mut(col.j).assign(&col.beta_col);
    }
    let upper_bound = outcome.best_value;
    let lower_bound = outcome.lower_bound.min(upper_bound);
    let gap = ((upper_bound - lower_bound) / upper_bound.max(1e-12)).max(0.0);
    Ok(SolveResult {
        z_hat: outcome.best_z,
        beta_hat,
        upper_bound,
        lower_bound,
        gap,
        iterations: outcome.iterations,
        trace: outcome.trace,
        converged: outcome.converged,
        lambda,
    })
}

fn validate(data: &Dataset, cfg: &SolverConfig) -> Result<()> {
    if cfg.s == 0 || cfg.s > data.p {
        return Err(SpcaError::InvalidParameter(format!(
            "cardinality s = {} must satisfy 1 <= s <= p = {}",
            cfg.s, data.p
        )));
    }
    if !(0.0..1.0).contains(&cfg.tol) {
        return Err(SpcaError::InvalidParameter(format!(
            "tol = {} must lie in [0, 1)",
            cfg.tol
        )));
    }
    if cfg.max_iters == 0 {
        return Err(SpcaError::InvalidParameter("max_iters must be >= 1".into()));
    }
    Ok(())
}

struct Clock {
    start: Instant,
    enabled: bool,
    limit: Option<f64>,
}

impl Clock {
    fn new(enabled: bool, limit: Option<f64>) -> Self {
        Clock {
            start: Instant::now(),
            enabled,
            limit,
        }
    }

    fn elapsed(&self) -> f64 {
        if self.enabled {
            self.start.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }

    fn expired(&self) -> bool {
        match self.limit {
            Some(limit) => self.enabled && self.start.elapsed().as_secs_f64() > limit,
            None => false,
        }
    }
}

struct RunParams {
    s: usize,
    tol: f64,
    max_iters: usize,
    sub: SubproblemConfig,
    node_budget: usize,
    dual_iters: usize,
    forced_zero: Vec<usize>,
    clock: Clock,
}

struct RunOutcome {
    best_value: f64,
    best_z: Vec<bool>,
    best_columns: Vec<ColumnSolution>,
    lower_bound: f64,
    iterations: usize,
    trace: Vec<IterRecord>,
    converged: bool,
}

struct Incumbent {
    value: f64,
    z: Vec<bool>,
    columns: Vec<ColumnSolution>,
}

fn run_outer(
    data: &Dataset,
    params: RunParams,
    z_start: Vec<bool>,
    log: &mut Option<&mut dyn Write>,
) -> Result<RunOutcome> {
    let cross = precompute_cross_products(data);
    let mut mp = MasterProblem::new(data.p, params.s);
    mp.forced_zero = params.forced_zero.clone();
    mp.node_budget = params.node_budget;
    mp.dual_iters = params.dual_iters;

    let mut cache: HashMap<Vec<bool>, f64> = HashMap::new();
    let mut best: Option<Incumbent> = None;
    let mut lower = f64::NEG_INFINITY;
    let mut trace: Vec<IterRecord> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut anchor = z_start;

    for t in 1..=params.max_iters {
        iterations = t;
        let oracle = evaluate_f(data, &anchor, &params.sub)?;
        let grad = subgradient(data, &anchor, &oracle, &params.sub, &cross);
        cache.insert(anchor.clone(), oracle.value);
        let improves = best.as_ref().is_none_or(|b| oracle.value < b.value);
        if improves {
            best = Some(Incumbent {
                value: oracle.value,
                z: anchor.clone(),
                columns: oracle.columns,
            });
        }
        let inc = best.as_ref().expect("incumbent set on first iteration");
        mp.add_cut(Cut::new(anchor.clone(), oracle.value, grad));
        mp.incumbent = Some((inc.z.clone(), inc.value));

        let (eta, next, master_exact) = match solve_master(&mp, 0.0) {
            Ok(sol) => (sol.eta, sol.z, true),
            Err(SpcaError::MasterBudget { z, lower_bound, .. }) => (lower_bound, z, false),
            Err(e) => return Err(e),
        };
        lower = lower.max(eta);
        let upper = inc.value;
        let gap = ((upper - lower) / upper.max(1e-12)).max(0.0);
        let record = IterRecord {
            iter: t,
            upper_bound: upper,
            lower_bound: lower,
            gap,
            elapsed: params.clock.elapsed(),
            support: (0..data.p).filter(|&v| inc.z[v]).collect(),
        };
        if let Some(out) = log.as_deref_mut() {
            write_progress(out, &record)?;
        }
        trace.push(record);

        if gap <= params.tol {
            converged = true;
            break;
        }
        if params.clock.expired() {
            break;
        }
        if cache.contains_key(&next) {
            if master_exact {
                // The exact master landed on an anchor whose cut is tight, so
                // the master optimum equals the best evaluated value.
                lower = upper;
                converged = true;
            }
            break;
        }
        anchor = next;
    }

    let inc = best.expect("at least one iteration ran");
    Ok(RunOutcome {
        best_value: inc.value,
        best_z: inc.z,
        best_columns: inc.columns,
        lower_bound: lower,
        iterations,
        trace,
        converged,
    })
}

fn write_progress(out: &mut dyn Write, rec: &IterRecord) -> Result<()> {
    let support = if rec.support.is_empty() {
        "-".to_string()
    } else {
        rec.support
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    writeln!(
        out,
        "{}\t{:.9e}\t{:.9e}\t{:.6e}\t{:.3}\t{}",
        rec.iter, rec.upper_bound, rec.lower_bound, rec.gap, rec.elapsed, support
    )?;
    Ok(())
}
