//! Reference estimators used for comparison: truncated power iteration on the
//! sample covariance, and covariance thresholding.

use ndarray::{Array1, Array2};

use crate::error::{Result, SpcaError};
use crate::estimator::fix_sign;
use crate::model::Dataset;

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub u_hat: Array1<f64>,
    pub support: Vec<usize>,
    pub iterations: usize,
    pub method: &'static str,
    /// Set when the thresholding level was clamped to zero because the grid
    /// made log(p / s^2) undefined.
    pub tau_fallback: bool,
}

fn sample_covariance(data: &Dataset) -> Array2<f64> {
    data.x().t().dot(data.x()) / data.n as f64
}

/// Indices of the s largest magnitudes, smaller index first on ties.
fn top_s_indices(v: &Array1<f64>, s: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    let mut keep = idx[..s].to_vec();
    keep.sort_unstable();
    keep
}

/// Power iteration with hard truncation to the top s magnitudes after every
/// multiply. Converges when successive iterates are within `tol` in angle.
/// A zero iterate triggers restarts from each coordinate axis in turn before
/// the method reports failure.
pub fn truncated_power_method(
    data: &Dataset,
    s: usize,
    init: &[f64],
    max_iters: usize,
    tol: f64,
) -> Result<BaselineResult> {
    let p = data.p;
    if s == 0 || s > p {
        return Err(SpcaError::InvalidParameter(format!(
            "truncation size {s} out of range for {p} coordinates"
        )));
    }
    if init.len() != p {
        return Err(SpcaError::InvalidParameter(format!(
            "initial vector has length {} but the data has {p} columns",
            init.len()
        )));
    }
    let norm = init.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(SpcaError::InvalidParameter(format!(
            "initial vector norm {norm} is not 1"
        )));
    }
    let sigma = sample_covariance(data);

    let mut v = Array1::from_iter(init.iter().map(|x| x / norm));
    let mut keep: Vec<usize> = (0..p).filter(|&i| v[i] != 0.0).collect();
    let mut restarts = 0usize;
    let mut iterations = 0usize;
    while iterations < max_iters {
        iterations += 1;
        let w = sigma.dot(&v);
        keep = top_s_indices(&w, s);
        let mut t = Array1::zeros(p);
        for &i in &keep {
            t[i] = w[i];
        }
        let tnorm = t.dot(&t).sqrt();
        if tnorm == 0.0 {
            if restarts >= p {
                return Err(SpcaError::DegenerateIterate);
            }
            v = Array1::zeros(p);
            v[restarts] = 1.0;
            keep = vec![restarts];
            restarts += 1;
            continue;
        }
        t /= tnorm;
        let cos = t.dot(&v).abs().min(1.0);
        let sin = (1.0 - cos * cos).max(0.0).sqrt();
        v = t;
        if sin <= tol {
            break;
        }
    }
    fix_sign(v.as_slice_mut().expect("contiguous"));
    Ok(BaselineResult {
        u_hat: v,
        support: keep,
        iterations,
        method: "truncated-power",
        tau_fallback: false,
    })
}

/// Hard-thresholds the off-diagonal of the sample covariance at
/// alpha * sqrt(log(p / s^2) / n) and returns the leading eigenvector of the
/// result. Support is every coordinate with magnitude above 1e-8, so it need
/// not have size s.
pub fn covariance_thresholding(data: &Dataset, s: usize, alpha: f64) -> Result<BaselineResult> {
    let p = data.p;
    if s == 0 {
        return Err(SpcaError::InvalidParameter(
            "sparsity level must be positive".into(),
        ));
    }
    if alpha < 0.0 {
        return Err(SpcaError::InvalidParameter(format!(
            "threshold scale {alpha} is negative"
        )));
    }
    let mut sigma = sample_covariance(data);
    let (tau, tau_fallback) = if p > s * s {
        (
            alpha * ((p as f64 / (s * s) as f64).ln() / data.n as f64).sqrt(),
            false,
        )
    } else {
        (0.0, true)
    };
    for i in 0..p {
        for j in 0..p {
            if i != j && sigma[[i, j]].abs() < tau {
                sigma[[i, j]] = 0.0;
            }
        }
    }
    // Shift by the largest absolute row sum so the spectrum is nonnegative and
    // plain power iteration targets the algebraically largest eigenvalue.
    let shift = (0..p)
        .map(|i| (0..p).map(|j| sigma[[i, j]].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    for i in 0..p {
        sigma[[i, i]] += shift;
    }
    let (u_hat, iterations) =
        crate::estimator::leading_left_singular_vector(&sigma, 1e-10, 10_000, 0x5eed)?;
    let support: Vec<usize> = (0..p).filter(|&i| u_hat[i].abs() > 1e-8).collect();
    Ok(BaselineResult {
        u_hat,
        support,
        iterations,
        method: "cov-threshold",
        tau_fallback,
    })
}
