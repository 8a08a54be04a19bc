//! Per-column box-constrained ridge regressions: evaluating the partially
//! minimized objective F1 at a binary support vector, and assembling the
//! subgradient that turns each evaluation into a valid cut.

use std::collections::HashMap;
use std::sync::Mutex;

use ndarray::{aview1, Array1, Array2, ShapeBuilder};
use rayon::prelude::*;

use crate::error::{Result, SpcaError};
use crate::model::Dataset;

/// Knobs for the column subproblems.
#[derive(Debug, Clone)]
pub struct SubproblemConfig {
    /// Ridge weight, >= 0.
    pub lambda: f64,
    /// Box bound on every coefficient.
    pub big_m: f64,
    /// Base KKT tolerance; the effective tolerance for column j is
    /// `qp_tol * (1 + ||X_col_j||^2)`.
    pub qp_tol: f64,
    /// Cap on coordinate-descent sweeps per column.
    pub qp_max_iter: usize,
}

impl Default for SubproblemConfig {
    fn default() -> Self {
        SubproblemConfig {
            lambda: 0.0,
            big_m: 0.5,
            qp_tol: 1e-8,
            qp_max_iter: 10_000,
        }
    }
}

impl SubproblemConfig {
    pub fn effective_tol(&self, col_sq_norm: f64) -> f64 {
        self.qp_tol * (1.0 + col_sq_norm)
    }
}

/// Solution of one column regression.
#[derive(Debug, Clone)]
pub struct ColumnSolution {
    pub j: usize,
    /// Length-p coefficient vector, zero outside support minus {j}.
    pub beta_col: Array1<f64>,
    /// X_col_j minus the fitted combination of the other support columns.
    pub residual: Array1<f64>,
    /// 0.5 ||residual||^2 + lambda * sum beta^2.
    pub objective: f64,
    pub kkt_residual: f64,
}

/// F1 at a binary point together with the per-column solutions, and the
/// subgradient once it has been attached.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub value: f64,
    pub columns: Vec<ColumnSolution>,
    pub subgrad: Option<Array1<f64>>,
}

/// Cached inner products between data columns. Full mode stores the whole
/// Gram matrix; lazy mode computes columns on demand and memoizes them.
#[derive(Debug)]
pub struct CrossProducts {
    full: Option<Array2<f64>>,
    cache: Mutex<HashMap<usize, Vec<f64>>>,
}

/// Entry budget above which the Gram matrix is no longer materialized.
const FULL_GRAM_LIMIT: usize = 1 << 22;

pub fn precompute_cross_products(data: &Dataset) -> CrossProducts {
    if data.p * data.p <= FULL_GRAM_LIMIT {
        CrossProducts::full(data)
    } else {
        CrossProducts::lazy()
    }
}

impl CrossProducts {
    pub fn full(data: &Dataset) -> Self {
        let gram = data.x().t().dot(data.x());
        CrossProducts {
            full: Some(gram),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn lazy() -> Self {
        CrossProducts {
            full: None,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn is_full(&self) -> bool {
        self.full.is_some()
    }

    pub fn entry(&self, data: &Dataset, i: usize, j: usize) -> f64 {
        match &self.full {
            Some(g) => g[[i, j]],
            None => self.gram_column(data, j)[i],
        }
    }

    /// The j-th Gram column X^T X_col_j.
    pub fn gram_column(&self, data: &Dataset, j: usize) -> Vec<f64> {
        if let Some(g) = &self.full {
            return g.column(j).to_vec();
        }
        let mut cache = self.cache.lock().expect("gram cache poisoned");
        cache
            .entry(j)
            .or_insert_with(|| {
                let cj = data.column(j);
                (0..data.p).map(|i| dot(data.column(i), cj)).collect()
            })
            .clone()
    }
}

/// Minimizes 0.5 ||X_col_j - sum_i beta_i X_col_i||^2 + lambda sum beta_i^2
/// over |beta_i| <= M, i ranging over `support` minus {j}, by cyclic projected
/// coordinate descent with exact univariate steps.
pub fn solve_column_qp(
    data: &Dataset,
    j: usize,
    support: &[usize],
    cfg: &SubproblemConfig,
) -> Result<ColumnSolution> {
    let p = data.p;
    if j >= p || support.iter().any(|&i| i >= p) {
        return Err(SpcaError::InvalidParameter(
            "column index out of range".into(),
        ));
    }
    if !support.contains(&j) {
        return Err(SpcaError::InvalidParameter(format!(
            "column {j} is not in the requested support"
        )));
    }
    let free: Vec<usize> = support.iter().copied().filter(|&i| i != j).collect();
    let y = data.column(j);
    let mut residual: Vec<f64> = y.to_vec();
    let mut beta = vec![0.0; p];
    let tol = cfg.effective_tol(data.col_sq_norm(j));

    if free.is_empty() {
        return Ok(ColumnSolution {
            j,
            beta_col: Array1::zeros(p),
            residual: Array1::from_vec(residual),
            objective: 0.5 * data.col_sq_norm(j),
            kkt_residual: 0.0,
        });
    }

    let m = cfg.big_m;
    let lam2 = 2.0 * cfg.lambda;
    let mut worst = f64::INFINITY;
    for _sweep in 1..=cfg.qp_max_iter {
        for &i in &free {
            let ai = data.column(i);
            let sq = data.col_sq_norm(i);
            let denom = sq + lam2;
            if denom == 0.0 {
                beta[i] = 0.0;
                continue;
            }
            let target = ((dot(ai, &residual) + sq * beta[i]) / denom).clamp(-m, m);
            let step = target - beta[i];
            if step != 0.0 {
                for (rk, ak) in residual.iter_mut().zip(ai) {
                    *rk -= step * ak;
                }
                beta[i] = target;
            }
        }
        worst = 0.0;
        for &i in &free {
            let grad = -dot(data.column(i), &residual) + lam2 * beta[i];
            let viol = if beta[i] >= m {
                grad.max(0.0)
            } else if beta[i] <= -m {
                (-grad).max(0.0)
            } else {
                grad.abs()
            };
            worst = worst.max(viol);
        }
        if worst <= tol {
            let objective = 0.5 * dot(&residual, &residual)
                + cfg.lambda * free.iter().map(|&i| beta[i] * beta[i]).sum::<f64>();
            return Ok(ColumnSolution {
                j,
                beta_col: Array1::from_vec(beta),
                residual: Array1::from_vec(residual),
                objective,
                kkt_residual: worst,
            });
        }
    }
    Err(SpcaError::QpConvergence {
        column: j,
        residual: worst,
        tol,
        sweeps: cfg.qp_max_iter,
    })
}

/// Evaluates F1(z): raw half column norms where z is off, column QPs where z
/// is on. The QPs are independent and solved in parallel; the total is summed
/// in column order so serial and parallel runs agree bit for bit.
pub fn evaluate_f(data: &Dataset, z: &[bool], cfg: &SubproblemConfig) -> Result<OracleResult> {
    if z.len() != data.p {
        return Err(SpcaError::InvalidParameter(format!(
            "z has length {}, expected {}",
            z.len(),
            data.p
        )));
    }
    let support: Vec<usize> = (0..data.p).filter(|&j| z[j]).collect();
    let base: f64 = (0..data.p)
        .filter(|&j| !z[j])
        .map(|j| 0.5 * data.col_sq_norm(j))
        .sum();
    let columns: Vec<ColumnSolution> = if support.len() > 1 {
        support
            .par_iter()
            .map(|&j| solve_column_qp(data, j, &support, cfg))
            .collect::<Result<Vec<_>>>()?
    } else {
        support
            .iter()
            .map(|&j| solve_column_qp(data, j, &support, cfg))
            .collect::<Result<Vec<_>>>()?
    };
    let value = base + columns.iter().map(|c| c.objective).sum::<f64>();
    Ok(OracleResult {
        value,
        columns,
        subgrad: None,
    })
}

/// Subgradient of F1 at the binary point z, built from the solved columns.
///
/// With alpha_col_j the residual for active columns and the raw column
/// otherwise, c[i][j] = <X_col_i, alpha_col_j> (c[j][j] = 0), each pair
/// contributes the four-case dual weights, and
/// g_i = -sum_j (Gamma1[i][j] + Gamma2[j][i] + lambda * beta[j][i]^2).
pub fn subgradient(
    data: &Dataset,
    z: &[bool],
    oracle: &OracleResult,
    cfg: &SubproblemConfig,
    cross: &CrossProducts,
) -> Array1<f64> {
    let p = data.p;
    let mut pos = vec![usize::MAX; p];
    for (k, col) in oracle.columns.iter().enumerate() {
        pos[col.j] = k;
    }
    let mut c = Array2::zeros((p, p).f());
    for j in 0..p {
        if z[j] {
            let col = &oracle.columns[pos[j]];
            let prods = data.x().t().dot(&col.residual);
            c.column_mut(j).assign(&prods);
        } else {
            let prods = cross.gram_column(data, j);
            c.column_mut(j).assign(&aview1(&prods));
        }
        c[[j, j]] = 0.0;
    }

    let beta = |i: usize, j: usize| -> f64 {
        if z[j] {
            oracle.columns[pos[j]].beta_col[i]
        } else {
            0.0
        }
    };
    let m = cfg.big_m;
    let lam = cfg.lambda;
    let mut g = Array1::zeros(p);
    for i in 0..p {
        let mut acc = 0.0;
        for j in 0..p {
            let gamma1 = match (z[i], z[j]) {
                (true, true) => m * (c[[i, j]] - 2.0 * lam * beta(i, j)).abs() / 2.0,
                (false, false) => m * c[[i, j]].abs() / 2.0,
                (true, false) => 0.0,
                (false, true) => m * c[[i, j]].abs(),
            };
            let gamma2 = match (z[j], z[i]) {
                (true, true) => m * (c[[j, i]] - 2.0 * lam * beta(j, i)).abs() / 2.0,
                (false, false) => m * c[[j, i]].abs() / 2.0,
                (true, false) => m * c[[j, i]].abs(),
                (false, true) => 0.0,
            };
            let bji = beta(j, i);
            acc += gamma1 + gamma2 + lam * bji * bji;
        }
        g[i] = -acc;
    }
    g
}

/// Convenience wrapper: evaluate F1 and attach the subgradient.
pub fn evaluate_with_subgradient(
    data: &Dataset,
    z: &[bool],
    cfg: &SubproblemConfig,
    cross: &CrossProducts,
) -> Result<OracleResult> {
    let mut oracle = evaluate_f(data, z, cfg)?;
    let g = subgradient(data, z, &oracle, cfg, cross);
    oracle.subgrad = Some(g);
    Ok(oracle)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    aview1(a).dot(&aview1(b))
}
