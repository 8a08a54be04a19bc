//! Seeded experiment sweeps over (n, s) grids with replications, producing
//! one metric row per method run and grouped summary tables.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::{covariance_thresholding, truncated_power_method};
use crate::error::{Result, SpcaError};
use crate::estimator::estimate_from_result;
use crate::model::{make_model, sample_data, sin_angle, support_error, SpikedModel};
use crate::outer::{solve, LambdaMode, SolverConfig};

const TPM_MAX_ITERS: usize = 2_000;
const TPM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    VaryN,
    VaryS,
    GapBench,
    Compare,
}

impl Scenario {
    pub fn id(self) -> &'static str {
        match self {
            Scenario::VaryN => "vary_n",
            Scenario::VaryS => "vary_s",
            Scenario::GapBench => "gap_bench",
            Scenario::Compare => "compare",
        }
    }

    /// Methods run when the config does not name any explicitly.
    pub fn default_methods(self) -> Vec<Method> {
        match self {
            Scenario::VaryN | Scenario::VaryS => vec![Method::Mip],
            Scenario::GapBench => vec![Method::Mip, Method::MipRidge],
            Scenario::Compare => {
                vec![Method::Mip, Method::TruncatedPower, Method::CovThreshold]
            }
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scenario {
    type Err = SpcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vary_n" => Ok(Scenario::VaryN),
            "vary_s" => Ok(Scenario::VaryS),
            "gap_bench" => Ok(Scenario::GapBench),
            "compare" => Ok(Scenario::Compare),
            other => Err(SpcaError::Parse(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Mip,
    MipRidge,
    TruncatedPower,
    CovThreshold,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Mip => "mip",
            Method::MipRidge => "mip-ridge",
            Method::TruncatedPower => "truncated-power",
            Method::CovThreshold => "cov-threshold",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Method::Mip => 2,
            Method::MipRidge => 3,
            Method::TruncatedPower => 4,
            Method::CovThreshold => 5,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = SpcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mip" => Ok(Method::Mip),
            "mip-ridge" => Ok(Method::MipRidge),
            "truncated-power" => Ok(Method::TruncatedPower),
            "cov-threshold" => Ok(Method::CovThreshold),
            other => Err(SpcaError::Parse(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub p: usize,
    pub n_grid: Vec<usize>,
    pub s_grid: Vec<usize>,
    pub theta: f64,
    pub replications: usize,
    pub seed: u64,
    /// Empty means the scenario's default method set.
    pub methods: Vec<Method>,
    /// Template; `s` and `seed` are overridden per cell.
    pub solver: SolverConfig,
    /// Ridge weight for the plain `mip` method; `mip-ridge` always uses the
    /// heuristic.
    pub lambda_mode: LambdaMode,
    /// Threshold scale for covariance thresholding.
    pub alpha: f64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn methods(&self) -> Vec<Method> {
        if self.methods.is_empty() {
            self.scenario.default_methods()
        } else {
            self.methods.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.s_grid.is_empty() {
            return Err(SpcaError::InvalidParameter("empty grid".into()));
        }
        if self.replications == 0 {
            return Err(SpcaError::InvalidParameter(
                "replications must be at least 1".into(),
            ));
        }
        for &n in &self.n_grid {
            if n < 2 {
                return Err(SpcaError::InvalidParameter(format!(
                    "sample size {n} is below 2"
                )));
            }
        }
        for &s in &self.s_grid {
            if s == 0 || s > self.p {
                return Err(SpcaError::InvalidParameter(format!(
                    "sparsity {s} out of range for p = {}",
                    self.p
                )));
            }
        }
        if self.theta <= 0.0 || self.theta.is_nan() {
            return Err(SpcaError::InvalidParameter(format!(
                "spike strength {} must be positive",
                self.theta
            )));
        }
        if self.alpha < 0.0 {
            return Err(SpcaError::InvalidParameter(format!(
                "threshold scale {} is negative",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub scenario: String,
    pub method: String,
    pub p: usize,
    pub n: usize,
    pub s: usize,
    pub theta: f64,
    pub seed: u64,
    pub sin_angle: f64,
    pub support_error: f64,
    /// None for baselines, which certify nothing.
    pub gap: Option<f64>,
    pub wall_seconds: f64,
    pub converged: bool,
}

/// Stable per-cell seed derivation so sub-sweeps of a grid reproduce the
/// matching cells of a full sweep.
pub fn derive_seed(top: u64, n: usize, s: usize, rep: usize, stream: u64) -> u64 {
    let mut h = splitmix64(top ^ 0x9e37_79b9_7f4a_7c15);
    for v in [n as u64, s as u64, rep as u64, stream] {
        h = splitmix64(h ^ splitmix64(v.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

struct Cell {
    n: usize,
    s: usize,
    rep: usize,
    method: Method,
}

fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let methods = cfg.methods();
    let mut out = Vec::new();
    for &n in &cfg.n_grid {
        for &s in &cfg.s_grid {
            for rep in 0..cfg.replications {
                for &method in &methods {
                    out.push(Cell { n, s, rep, method });
                }
            }
        }
    }
    out
}

/// Runs every (n, s) x replication x method cell. Solver failures inside a
/// cell become rows with NaN metrics and converged = false; they never abort
/// the sweep. Row order is the deterministic grid order regardless of how the
/// cells are scheduled.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricRow>> {
    cfg.validate()?;
    let cells = cells(cfg);
    Ok(cells.par_iter().map(|cell| run_cell(cfg, cell)).collect())
}

fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> MetricRow {
    // The model seed ignores n so a replication sees the same planted vector
    // across the whole n grid.
    let model_seed = derive_seed(cfg.seed, 0, cell.s, cell.rep, 0);
    let data_seed = derive_seed(cfg.seed, cell.n, cell.s, cell.rep, 1);
    let algo_seed = derive_seed(cfg.seed, cell.n, cell.s, cell.rep, cell.method.stream());

    let row = |sin: f64, supp: f64, gap: Option<f64>, wall: f64, converged: bool| MetricRow {
        scenario: cfg.scenario.id().to_string(),
        method: cell.method.label().to_string(),
        p: cfg.p,
        n: cell.n,
        s: cell.s,
        theta: cfg.theta,
        seed: data_seed,
        sin_angle: sin,
        support_error: supp,
        gap,
        wall_seconds: wall,
        converged,
    };

    let model = make_model(cfg.p, cell.s, cfg.theta, model_seed).expect("validated config");
    let data = sample_data(&model, cell.n, data_seed).expect("validated config");
    let clock = cfg.solver.timing.then(Instant::now);
    let outcome = run_method(cfg, cell, &model, &data, algo_seed);
    let wall = clock.map_or(0.0, |c| c.elapsed().as_secs_f64());
    match outcome {
        Ok((sin, supp, gap, converged)) => row(sin, supp, gap, wall, converged),
        Err(_) => row(f64::NAN, f64::NAN, None, wall, false),
    }
}

fn run_method(
    cfg: &ExperimentConfig,
    cell: &Cell,
    model: &SpikedModel,
    data: &crate::model::Dataset,
    algo_seed: u64,
) -> Result<(f64, f64, Option<f64>, bool)> {
    let u_star = model.u_star.as_slice().expect("contiguous");
    let true_support = model.support();
    match cell.method {
        Method::Mip | Method::MipRidge => {
            let solver = SolverConfig {
                s: cell.s,
                seed: algo_seed,
                ..cfg.solver.clone()
            };
            let mode = match cell.method {
                Method::Mip => cfg.lambda_mode,
                _ => LambdaMode::Heuristic,
            };
            let res = solve(data, &solver, mode)?;
            let est = estimate_from_result(data, &res, algo_seed)?;
            let sin = sin_angle(est.u_hat.as_slice().expect("contiguous"), u_star)?;
            let supp = support_error(&est.support, &true_support);
            Ok((sin, supp, Some(res.gap), res.converged))
        }
        Method::TruncatedPower => {
            let j = ChaCha8Rng::seed_from_u64(algo_seed).random_range(0..cfg.p);
            let mut init = vec![0.0; cfg.p];
            init[j] = 1.0;
            let res = truncated_power_method(data, cell.s, &init, TPM_MAX_ITERS, TPM_TOL)?;
            let sin = sin_angle(res.u_hat.as_slice().expect("contiguous"), u_star)?;
            let supp = support_error(&res.support, &true_support);
            Ok((sin, supp, None, res.iterations < TPM_MAX_ITERS))
        }
        Method::CovThreshold => {
            let res = covariance_thresholding(data, cell.s, cfg.alpha)?;
            let sin = sin_angle(res.u_hat.as_slice().expect("contiguous"), u_star)?;
            let supp = support_error(&res.support, &true_support);
            Ok((sin, supp, None, true))
        }
    }
}

const METRIC_HEADER: [&str; 12] = [
    "scenario",
    "method",
    "p",
    "n",
    "s",
    "theta",
    "seed",
    "sin_angle",
    "support_error",
    "gap",
    "wall_seconds",
    "converged",
];

pub fn write_metric_rows<W: std::io::Write>(rows: &[MetricRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(METRIC_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.scenario.clone(),
            r.method.clone(),
            r.p.to_string(),
            r.n.to_string(),
            r.s.to_string(),
            r.theta.to_string(),
            r.seed.to_string(),
            r.sin_angle.to_string(),
            r.support_error.to_string(),
            r.gap.map_or_else(|| "NA".to_string(), |g| g.to_string()),
            r.wall_seconds.to_string(),
            r.converged.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_metric_rows<R: std::io::Read>(r: R) -> Result<Vec<MetricRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for record in rdr.records() {
        let rec = record?;
        if rec.len() != METRIC_HEADER.len() {
            return Err(SpcaError::Parse(format!(
                "metric row has {} fields, expected {}",
                rec.len(),
                METRIC_HEADER.len()
            )));
        }
        let field = |i: usize| rec.get(i).expect("length checked");
        let parse_f = |i: usize| -> Result<f64> {
            field(i)
                .parse()
                .map_err(|_| SpcaError::Parse(format!("bad float '{}'", field(i))))
        };
        let parse_u = |i: usize| -> Result<usize> {
            field(i)
                .parse()
                .map_err(|_| SpcaError::Parse(format!("bad count '{}'", field(i))))
        };
        out.push(MetricRow {
            scenario: field(0).to_string(),
            method: field(1).to_string(),
            p: parse_u(2)?,
            n: parse_u(3)?,
            s: parse_u(4)?,
            theta: parse_f(5)?,
            seed: field(6)
                .parse()
                .map_err(|_| SpcaError::Parse(format!("bad seed '{}'", field(6))))?,
            sin_angle: parse_f(7)?,
            support_error: parse_f(8)?,
            gap: match field(9) {
                "NA" => None,
                other => Some(
                    other
                        .parse()
                        .map_err(|_| SpcaError::Parse(format!("bad gap '{other}'")))?,
                ),
            },
            wall_seconds: parse_f(10)?,
            converged: field(11)
                .parse()
                .map_err(|_| SpcaError::Parse(format!("bad flag '{}'", field(11))))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: String,
    pub p: usize,
    pub n: usize,
    pub s: usize,
    pub count: usize,
    pub converged: usize,
    pub sin_mean: f64,
    pub sin_median: f64,
    pub sin_q1: f64,
    pub sin_q3: f64,
    pub support_mean: f64,
    pub support_median: f64,
    pub gap_mean: Option<f64>,
    pub gap_median: Option<f64>,
    pub wall_mean: f64,
    pub wall_median: f64,
}

fn finite(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn mean(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        f64::NAN
    } else {
        sorted.iter().sum::<f64>() / sorted.len() as f64
    }
}

/// Linear-interpolation quantile of presorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Groups rows by (scenario, method, p, n, s) and reports means, medians, and
/// quartiles; non-finite metric values (failed cells) are excluded from the
/// statistics but still counted in `count`.
pub fn summarize(rows: &[MetricRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String, usize, usize, usize), Vec<&MetricRow>> =
        BTreeMap::new();
    for r in rows {
        groups
            .entry((r.scenario.clone(), r.method.clone(), r.p, r.n, r.s))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((scenario, method, p, n, s), members)| {
            let sin = finite(members.iter().map(|r| r.sin_angle));
            let supp = finite(members.iter().map(|r| r.support_error));
            let gap = finite(members.iter().filter_map(|r| r.gap));
            let wall = finite(members.iter().map(|r| r.wall_seconds));
            SummaryRow {
                scenario,
                method,
                p,
                n,
                s,
                count: members.len(),
                converged: members.iter().filter(|r| r.converged).count(),
                sin_mean: mean(&sin),
                sin_median: quantile(&sin, 0.5),
                sin_q1: quantile(&sin, 0.25),
                sin_q3: quantile(&sin, 0.75),
                support_mean: mean(&supp),
                support_median: quantile(&supp, 0.5),
                gap_mean: (!gap.is_empty()).then(|| mean(&gap)),
                gap_median: (!gap.is_empty()).then(|| quantile(&gap, 0.5)),
                wall_mean: mean(&wall),
                wall_median: quantile(&wall, 0.5),
            }
        })
        .collect()
}

pub fn write_summary_rows<W: std::io::Write>(rows: &[SummaryRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "scenario",
        "method",
        "p",
        "n",
        "s",
        "count",
        "converged",
        "sin_mean",
        "sin_median",
        "sin_q1",
        "sin_q3",
        "support_mean",
        "support_median",
        "gap_mean",
        "gap_median",
        "wall_mean",
        "wall_median",
    ])?;
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    for r in rows {
        wtr.write_record([
            r.scenario.clone(),
            r.method.clone(),
            r.p.to_string(),
            r.n.to_string(),
            r.s.to_string(),
            r.count.to_string(),
            r.converged.to_string(),
            r.sin_mean.to_string(),
            r.sin_median.to_string(),
            r.sin_q1.to_string(),
            r.sin_q3.to_string(),
            r.support_mean.to_string(),
            r.support_median.to_string(),
            opt(r.gap_mean),
            opt(r.gap_median),
            r.wall_mean.to_string(),
            r.wall_median.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `<scenario>.csv` and `summary.csv` under the configured output
/// directory, returning the paths written.
pub fn write_outputs(cfg: &ExperimentConfig, rows: &[MetricRow]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let metrics_path = cfg.output_dir.join(format!("{}.csv", cfg.scenario.id()));
    write_metric_rows(rows, std::fs::File::create(&metrics_path)?)?;
    let summary_path = cfg.output_dir.join("summary.csv");
    write_summary_rows(&summarize(rows), std::fs::File::create(&summary_path)?)?;
    Ok(vec![metrics_path, summary_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            scenario: Scenario::Compare,
            p: 6,
            n_grid: vec![30],
            s_grid: vec![2],
            theta: 1.0,
            replications: 2,
            seed: 7,
            methods: Vec::new(),
            solver: SolverConfig {
                tol: 0.2,
                max_iters: 10,
                timing: false,
                ..SolverConfig::default()
            },
            lambda_mode: LambdaMode::Zero,
            alpha: 2.0,
            output_dir: PathBuf::from("unused"),
        }
    }

    fn rows_to_csv(rows: &[MetricRow]) -> String {
        let mut buf = Vec::new();
        write_metric_rows(rows, &mut buf).expect("write");
        String::from_utf8(buf).expect("utf8")
    }

    #[test]
    fn labels_round_trip() {
        for m in [
            Method::Mip,
            Method::MipRidge,
            Method::TruncatedPower,
            Method::CovThreshold,
        ] {
            assert_eq!(m.label().parse::<Method>().expect("parse"), m);
        }
        for sc in [
            Scenario::VaryN,
            Scenario::VaryS,
            Scenario::GapBench,
            Scenario::Compare,
        ] {
            assert_eq!(sc.id().parse::<Scenario>().expect("parse"), sc);
        }
        assert!("anything-else".parse::<Method>().is_err());
        assert!("grid".parse::<Scenario>().is_err());
    }

    #[test]
    fn derive_seed_is_pure_and_spreads() {
        assert_eq!(derive_seed(1, 2, 3, 4, 5), derive_seed(1, 2, 3, 4, 5));
        let mut seen = std::collections::HashSet::new();
        for n in 0..4 {
            for s in 0..4 {
                for rep in 0..4 {
                    for stream in 0..4 {
                        seen.insert(derive_seed(9, n, s, rep, stream));
                    }
                }
            }
        }
        assert_eq!(seen.len(), 256);
    }

    #[test]
    fn run_experiment_is_deterministic() {
        let cfg = tiny_config();
        let a = run_experiment(&cfg).expect("run");
        let b = run_experiment(&cfg).expect("run");
        assert_eq!(rows_to_csv(&a), rows_to_csv(&b));
        assert_eq!(a.len(), 2 * 3);
    }

    #[test]
    fn sub_sweep_reproduces_matching_cells() {
        let mut full = tiny_config();
        full.n_grid = vec![20, 30];
        full.methods = vec![Method::TruncatedPower, Method::CovThreshold];
        let full_rows = run_experiment(&full).expect("run");

        let mut sub = full.clone();
        sub.n_grid = vec![30];
        sub.methods = vec![Method::CovThreshold];
        let sub_rows = run_experiment(&sub).expect("run");

        let matching: Vec<&MetricRow> = full_rows
            .iter()
            .filter(|r| r.n == 30 && r.method == "cov-threshold")
            .collect();
        assert_eq!(matching.len(), sub_rows.len());
        for (a, b) in matching.iter().zip(&sub_rows) {
            assert_eq!(**a, *b);
        }
    }

    #[test]
    fn metric_rows_round_trip() {
        let cfg = tiny_config();
        let rows = run_experiment(&cfg).expect("run");
        let text = rows_to_csv(&rows);
        let back = read_metric_rows(text.as_bytes()).expect("read");
        assert_eq!(rows, back);
    }

    #[test]
    fn gap_sentinel_for_baselines() {
        let cfg = tiny_config();
        let rows = run_experiment(&cfg).expect("run");
        for r in &rows {
            match r.method.as_str() {
                "mip" | "mip-ridge" => assert!(r.gap.is_some()),
                _ => assert!(r.gap.is_none()),
            }
            assert!(r.sin_angle >= 0.0 && r.sin_angle <= 1.0);
            assert!(r.support_error >= 0.0);
            assert_eq!(r.wall_seconds, 0.0);
        }
    }

    #[test]
    fn validation_rejects_bad_grids() {
        let mut cfg = tiny_config();
        cfg.n_grid.clear();
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = tiny_config();
        cfg.s_grid = vec![7];
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = tiny_config();
        cfg.replications = 0;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = tiny_config();
        cfg.n_grid = vec![1];
        assert!(run_experiment(&cfg).is_err());
    }

    fn row(method: &str, n: usize, sin: f64) -> MetricRow {
        MetricRow {
            scenario: "compare".into(),
            method: method.into(),
            p: 10,
            n,
            s: 2,
            theta: 1.0,
            seed: 0,
            sin_angle: sin,
            support_error: 1.0,
            gap: None,
            wall_seconds: 0.5,
            converged: true,
        }
    }

    #[test]
    fn summarize_single_row_is_its_own_median() {
        let rows = vec![row("mip", 100, 0.25)];
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 1);
        assert_eq!(summary[0].sin_median, 0.25);
        assert_eq!(summary[0].sin_mean, 0.25);
        assert_eq!(summary[0].sin_q1, 0.25);
        assert_eq!(summary[0].count, 1);
    }

    #[test]
    fn summarize_median_of_three() {
        let rows = vec![
            row("mip", 100, 0.1),
            row("mip", 100, 0.9),
            row("mip", 100, 0.2),
        ];
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 1);
        assert_eq!(summary[0].sin_median, 0.2);
        assert!((summary[0].sin_mean - 0.4).abs() < 1e-12);
        assert!((summary[0].sin_q1 - 0.15).abs() < 1e-12);
        assert!((summary[0].sin_q3 - 0.55).abs() < 1e-12);
    }

    #[test]
    fn summarize_does_not_pool_methods() {
        let rows = vec![row("mip", 100, 0.1), row("truncated-power", 100, 0.9)];
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 2);
        assert!(summary
            .iter()
            .any(|s| s.method == "mip" && s.sin_median == 0.1));
        assert!(summary
            .iter()
            .any(|s| s.method == "truncated-power" && s.sin_median == 0.9));
    }

    #[test]
    fn summarize_skips_nan_rows_but_counts_them() {
        let mut bad = row("mip", 100, f64::NAN);
        bad.converged = false;
        let rows = vec![row("mip", 100, 0.3), bad];
        let summary = summarize(&rows);
        assert_eq!(summary[0].count, 2);
        assert_eq!(summary[0].converged, 1);
        assert_eq!(summary[0].sin_median, 0.3);
    }

    #[test]
    fn summarize_empty_is_empty() {
        assert!(summarize(&[]).is_empty());
    }

    #[test]
    fn nan_metric_rows_round_trip_as_nan() {
        let mut bad = row("mip", 100, f64::NAN);
        bad.support_error = f64::NAN;
        let text = rows_to_csv(&[bad]);
        let back = read_metric_rows(text.as_bytes()).expect("read");
        assert!(back[0].sin_angle.is_nan());
        assert!(back[0].support_error.is_nan());
    }
}
