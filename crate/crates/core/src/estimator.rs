//! Turns a solver result into the principal-component estimate: residual
//! variances, the plug-in matrix whose leading left singular vector is the
//! estimated component, and the power iteration that extracts it.

use ndarray::{aview1, Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SpcaError};
use crate::model::Dataset;
use crate::outer::{diagonal_thresholding, solve, LambdaMode, SolveResult, SolverConfig};

#[derive(Debug, Clone)]
pub struct EstimatorOutput {
    pub sigma_hat_sq: Array1<f64>,
    pub b_hat: Array2<f64>,
    pub u_hat: Array1<f64>,
    pub support: Vec<usize>,
    pub power_iters_used: usize,
}

/// Residual variance of each selected column's regression; exactly 1 for
/// unselected columns.
pub fn sigma_hat(data: &Dataset, result: &SolveResult) -> Array1<f64> {
    let p = data.p;
    let n = data.n as f64;
    let mut out = Array1::ones(p);
    for i in 0..p {
        if !result.z_hat[i] {
            continue;
        }
        let mut r: Vec<f64> = data.column(i).to_vec();
        for j in 0..p {
            let b = result.beta_hat[[j, i]];
            if b != 0.0 {
                for (rk, xk) in r.iter_mut().zip(data.column(j)) {
                    *rk -= b * xk;
                }
            }
        }
        out[i] = aview1(&r).dot(&aview1(&r)) / n;
    }
    out
}

/// Off-diagonal entries copy beta_hat; the diagonal is sigma^2 - 1.
pub fn build_b_hat(beta_hat: &Array2<f64>, sigma_hat_sq: &Array1<f64>) -> Array2<f64> {
    let mut b = beta_hat.clone();
    for j in 0..b.nrows() {
        debug_assert_eq!(beta_hat[[j, j]], 0.0);
        b[[j, j]] = sigma_hat_sq[j] - 1.0;
    }
    b
}

/// Leading left singular vector of B by power iteration on B B^T, restricted
/// to the rows/columns that are not identically zero. The start vector is
/// seeded uniform on the sphere; one restart from a shifted seed is attempted
/// before giving up. The sign is fixed so the first nonzero entry is >= 0.
pub fn leading_left_singular_vector(
    b: &Array2<f64>,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<(Array1<f64>, usize)> {
    let (p, q) = b.dim();
    let active: Vec<usize> = (0..p)
        .filter(|&i| {
            (0..q).any(|j| b[[i, j]] != 0.0) || (i < q && (0..p).any(|r| b[[r, i]] != 0.0))
        })
        .collect();
    if active.is_empty() {
        return Err(SpcaError::DegenerateMatrix);
    }
    let k = active.len();
    let mut bs = Array2::zeros((k, q));
    for (a, &i) in active.iter().enumerate() {
        for j in 0..q {
            bs[[a, j]] = b[[i, j]];
        }
    }
    let m = bs.dot(&bs.t());

    let mut total_iters = 0;
    let mut last_residual = f64::INFINITY;
    for attempt in 0..2 {
        let mut v = sphere_point(k, seed.wrapping_add(attempt));
        for _ in 0..max_iters {
            total_iters += 1;
            let w = m.dot(&v);
            let rho = v.dot(&w);
            let residual = (&w - &(rho * &v)).dot(&(&w - &(rho * &v))).sqrt();
            let wnorm = w.dot(&w).sqrt();
            if wnorm == 0.0 {
                break;
            }
            v = w / wnorm;
            last_residual = residual;
            if residual <= tol * rho.abs().max(f64::MIN_POSITIVE) {
                let mut full = Array1::zeros(p);
                for (a, &i) in active.iter().enumerate() {
                    full[i] = v[a];
                }
                fix_sign(full.as_slice_mut().expect("contiguous"));
                return Ok((full, total_iters));
            }
        }
    }
    Err(SpcaError::PowerIteration {
        residual: last_residual,
        iters: total_iters,
    })
}

fn sphere_point(k: usize, seed: u64) -> Array1<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v: Array1<f64> =
            Array1::from_iter((0..k).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let norm = v.dot(&v).sqrt();
        if norm > 0.0 {
            return v / norm;
        }
    }
}

/// Flips the vector so its first nonzero coordinate is nonnegative.
pub(crate) fn fix_sign(v: &mut [f64]) {
    for &x in v.iter() {
        if x != 0.0 {
            if x < 0.0 {
                for y in v.iter_mut() {
                    *y = -*y;
                }
            }
            return;
        }
    }
}

/// Full pipeline: solve, then post-process into a unit estimate.
pub fn estimate(data: &Dataset, cfg: &SolverConfig, mode: LambdaMode) -> Result<EstimatorOutput> {
    let result = solve(data, cfg, mode)?;
    estimate_from_result(data, &result, cfg.seed)
}

/// Post-processing half of [`estimate`], reusable when the solver result is
/// needed separately.
pub fn estimate_from_result(
    data: &Dataset,
    result: &SolveResult,
    seed: u64,
) -> Result<EstimatorOutput> {
    let sigma_hat_sq = sigma_hat(data, result);
    let b_hat = build_b_hat(&result.beta_hat, &sigma_hat_sq);
    let support = result.support();
    let all_zero = b_hat.iter().all(|v| *v == 0.0);
    let (u_hat, power_iters_used) = if all_zero {
        // Nothing to iterate on; fall back to the highest-variance axis.
        let j = diagonal_thresholding(data, 1)[0];
        let mut u = Array1::zeros(data.p);
        u[j] = 1.0;
        (u, 0)
    } else {
        leading_left_singular_vector(&b_hat, 1e-10, 10_000, seed)?
    };
    Ok(EstimatorOutput {
        sigma_hat_sq,
        b_hat,
        u_hat,
        support,
        power_iters_used,
    })
}

/// CSV with columns (index, u_hat, sigma_hat_sq, in_support).
pub fn write_estimate_csv<W: std::io::Write>(out: &EstimatorOutput, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["index", "u_hat", "sigma_hat_sq", "in_support"])?;
    let in_support: Vec<bool> = {
        let mut mask = vec![false; out.u_hat.len()];
        for &v in &out.support {
            mask[v] = true;
        }
        mask
    };
    for (i, &flagged) in in_support.iter().enumerate() {
        wtr.write_record([
            i.to_string(),
            out.u_hat[i].to_string(),
            out.sigma_hat_sq[i].to_string(),
            flagged.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
