//! Spiked covariance ground truth: model generation, sampling, population
//! quantities, and the evaluation metrics used throughout.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io;

use ndarray::{Array1, Array2, ShapeBuilder};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SpcaError};

/// Ground-truth parameters of the distribution N(0, I + theta * u u^T).
#[derive(Debug, Clone)]
pub struct SpikedModel {
    pub p: usize,
    pub s_true: usize,
    /// Signal strength, in (0, 1].
    pub theta: f64,
    /// Unit-norm principal component with exactly `s_true` nonzero entries.
    pub u_star: Array1<f64>,
}

impl SpikedModel {
    /// Indices of the nonzero coordinates of `u_star`, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.u_star
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// An n x p sample matrix with cached column norms. Stored column-major since
/// every downstream routine consumes whole columns.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Array2<f64>,
    pub n: usize,
    pub p: usize,
    column_sq_norms: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Array2<f64>) -> Self {
        let (n, p) = x.dim();
        let mut xf = Array2::zeros((n, p).f());
        xf.assign(&x);
        let column_sq_norms = (0..p)
            .map(|j| xf.column(j).iter().map(|v| v * v).sum())
            .collect();
        Dataset {
            x: xf,
            n,
            p,
            column_sq_norms,
        }
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    /// Column j as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        self.x
            .column(j)
            .to_slice()
            .expect("columns of a column-major array are contiguous")
    }

    pub fn col_sq_norm(&self, j: usize) -> f64 {
        self.column_sq_norms[j]
    }

    /// Sample variance ||X_col||^2 / n of column j.
    pub fn col_variance(&self, j: usize) -> f64 {
        self.column_sq_norms[j] / self.n as f64
    }

    /// Plain CSV, one row per observation, no header.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        for r in 0..self.n {
            let rec: Vec<String> = (0..self.p).map(|c| self.x[[r, c]].to_string()).collect();
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(input);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let row: Vec<f64> = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| SpcaError::Parse(format!("bad float {s:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(SpcaError::Parse("empty dataset".into()));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(SpcaError::Parse("ragged rows in dataset".into()));
        }
        let n = rows.len();
        let mut x = Array2::zeros((n, p).f());
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                x[[r, c]] = *v;
            }
        }
        Ok(Dataset::new(x))
    }
}

/// Population regression quantities implied by a spiked model.
#[derive(Debug, Clone)]
pub struct PopulationCoefficients {
    /// p x p, zero diagonal: beta[i][j] is the coefficient of feature i when
    /// regressing feature j on the rest.
    pub beta_star: Array2<f64>,
    /// Conditional variances of each feature given the rest.
    pub sigma_star_sq: Array1<f64>,
    /// Rank-one matrix whose leading left singular vector is u_star.
    pub b_star: Array2<f64>,
    pub d_diag: Array1<f64>,
}

/// Draws an s-sparse unit vector with Unif[0,1] magnitudes on a uniformly
/// chosen support.
pub fn make_model(p: usize, s: usize, theta: f64, seed: u64) -> Result<SpikedModel> {
    make_model_impl(p, s, theta, seed, false)
}

/// Like [`make_model`] but flips each support entry's sign with probability
/// one half.
pub fn make_model_with_signs(p: usize, s: usize, theta: f64, seed: u64) -> Result<SpikedModel> {
    make_model_impl(p, s, theta, seed, true)
}

fn make_model_impl(p: usize, s: usize, theta: f64, seed: u64, signs: bool) -> Result<SpikedModel> {
    if s == 0 || s > p {
        return Err(SpcaError::InvalidParameter(format!(
            "sparsity s = {s} must satisfy 1 <= s <= p = {p}"
        )));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(SpcaError::InvalidParameter(format!(
            "theta = {theta} must lie in (0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..p).collect();
    for k in 0..s {
        let swap = k + rng.random_range(0..p - k);
        idx.swap(k, swap);
    }
    let mut u = Array1::zeros(p);
    for &i in &idx[..s] {
        let mut v: f64 = rng.random();
        while v == 0.0 {
            v = rng.random();
        }
        if signs && rng.random::<bool>() {
            v = -v;
        }
        u[i] = v;
    }
    let norm = u.dot(&u).sqrt();
    u.mapv_inplace(|v| v / norm);
    Ok(SpikedModel {
        p,
        s_true: s,
        theta,
        u_star: u,
    })
}

/// Draws n iid rows from N(0, I + theta * u u^T) as x = g + sqrt(theta) xi u.
pub fn sample_data(model: &SpikedModel, n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(SpcaError::InvalidParameter(format!(
            "need at least two samples, got n = {n}"
        )));
    }
    let p = model.p;
    let sqrt_theta = model.theta.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, p).f());
    for r in 0..n {
        let xi: f64 = rng.sample(StandardNormal);
        let spike = sqrt_theta * xi;
        for c in 0..p {
            let g: f64 = rng.sample(StandardNormal);
            x[[r, c]] = g + spike * model.u_star[c];
        }
    }
    Ok(Dataset::new(x))
}

/// Closed-form regression coefficients, conditional variances, and the
/// rank-one target matrix of the model.
pub fn population_coefficients(model: &SpikedModel) -> PopulationCoefficients {
    let p = model.p;
    let theta = model.theta;
    let u = &model.u_star;
    let mut beta_star = Array2::zeros((p, p));
    let mut sigma_star_sq = Array1::zeros(p);
    let mut d_diag = Array1::zeros(p);
    let mut b_star = Array2::zeros((p, p));
    let ratio = theta / (1.0 + theta);
    for j in 0..p {
        let denom = 1.0 + theta - theta * u[j] * u[j];
        sigma_star_sq[j] = 1.0 + theta * u[j] * u[j] / denom;
        d_diag[j] = 1.0 / (1.0 - ratio * u[j] * u[j]);
        for i in 0..p {
            if i != j {
                beta_star[[i, j]] = theta * u[i] * u[j] / denom;
            }
            b_star[[i, j]] = ratio * u[i] * u[j] * d_diag[j];
        }
    }
    PopulationCoefficients {
        beta_star,
        sigma_star_sq,
        b_star,
        d_diag,
    }
}

/// sqrt(1 - <u, v>^2) for unit vectors; insensitive to sign flips of either
/// argument. Inputs within 1e-8 of unit norm are renormalized silently.
pub fn sin_angle(u_hat: &[f64], u_star: &[f64]) -> Result<f64> {
    if u_hat.len() != u_star.len() {
        return Err(SpcaError::InvalidParameter(
            "sin_angle: length mismatch".into(),
        ));
    }
    let na = norm(u_hat);
    let nb = norm(u_star);
    if (na - 1.0).abs() > 1e-8 || (nb - 1.0).abs() > 1e-8 {
        return Err(SpcaError::InvalidParameter(format!(
            "sin_angle needs unit vectors, got norms {na} and {nb}"
        )));
    }
    let dot: f64 = u_hat.iter().zip(u_star).map(|(a, b)| a * b).sum();
    let cos = dot / (na * nb);
    Ok((1.0 - cos * cos).max(0.0).sqrt())
}

/// Half the symmetric set difference of the two supports.
pub fn support_error(s_hat: &[usize], s_star: &[usize]) -> f64 {
    let a: HashSet<usize> = s_hat.iter().copied().collect();
    let b: HashSet<usize> = s_star.iter().copied().collect();
    let missed = b.difference(&a).count();
    let extra = a.difference(&b).count();
    (missed + extra) as f64 / 2.0
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Key-value text serialization of a model: scalars plus the nonzero entries
/// of u_star.
pub fn write_model<W: io::Write>(model: &SpikedModel, mut out: W) -> Result<()> {
    let mut buf = String::new();
    writeln!(buf, "p={}", model.p).unwrap();
    writeln!(buf, "s={}", model.s_true).unwrap();
    writeln!(buf, "theta={}", model.theta).unwrap();
    for (i, v) in model.u_star.iter().enumerate() {
        if *v != 0.0 {
            writeln!(buf, "u_{i}={v}").unwrap();
        }
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn read_model<R: io::Read>(mut input: R) -> Result<SpikedModel> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut p = None;
    let mut s = None;
    let mut theta = None;
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .ok_or_else(|| SpcaError::Parse(format!("expected key=value, got {line:?}")))?;
        let key = key.trim();
        let val = val.trim();
        match key {
            "p" => p = Some(parse_usize(val)?),
            "s" => s = Some(parse_usize(val)?),
            "theta" => theta = Some(parse_f64(val)?),
            "seed" => {}
            _ => {
                let idx = key
                    .strip_prefix("u_")
                    .ok_or_else(|| SpcaError::Parse(format!("unknown key {key:?}")))?;
                entries.push((parse_usize(idx)?, parse_f64(val)?));
            }
        }
    }
    let p = p.ok_or_else(|| SpcaError::Parse("missing p".into()))?;
    let s = s.ok_or_else(|| SpcaError::Parse("missing s".into()))?;
    let theta = theta.ok_or_else(|| SpcaError::Parse("missing theta".into()))?;
    let mut u = Array1::zeros(p);
    for (i, v) in entries {
        if i >= p {
            return Err(SpcaError::Parse(format!("u index {i} out of range")));
        }
        u[i] = v;
    }
    let nrm = u.dot(&u).sqrt();
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(SpcaError::Parse(format!("u_star norm {nrm} is not 1")));
    }
    let s_actual = u.iter().filter(|v| **v != 0.0).count();
    if s_actual != s {
        return Err(SpcaError::Parse(format!(
            "declared s = {s} but found {s_actual} nonzero entries"
        )));
    }
    Ok(SpikedModel {
        p,
        s_true: s,
        theta,
        u_star: u,
    })
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|e| SpcaError::Parse(format!("bad integer {s:?}: {e}")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|e| SpcaError::Parse(format!("bad float {s:?}: {e}")))
}
