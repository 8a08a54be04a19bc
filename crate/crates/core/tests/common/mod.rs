#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spca_core::master::{Cut, MasterProblem};
use spca_core::model::Dataset;
use spca_core::qp::{evaluate_f, SubproblemConfig};

pub fn random_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.sample::<f64, _>(StandardNormal));
    Dataset::new(x)
}

pub fn z_from_support(p: usize, support: &[usize]) -> Vec<bool> {
    let mut z = vec![false; p];
    for &i in support {
        z[i] = true;
    }
    z
}

/// Every support of size at most s, in ascending bitmask order.
pub fn supports_up_to(p: usize, s: usize) -> Vec<Vec<usize>> {
    assert!(p <= 20, "enumeration helper is for small p");
    let mut out = Vec::new();
    for mask in 0u32..(1 << p) {
        if (mask.count_ones() as usize) <= s {
            out.push((0..p).filter(|i| mask >> i & 1 == 1).collect());
        }
    }
    out
}

/// Exhaustive minimum of the selection objective over supports of size <= s.
pub fn enumeration_minimum(data: &Dataset, s: usize, cfg: &SubproblemConfig) -> (f64, Vec<usize>) {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for support in supports_up_to(data.p, s) {
        let z = z_from_support(data.p, &support);
        let value = evaluate_f(data, &z, cfg).expect("oracle").value;
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, support));
        }
    }
    best.expect("nonempty enumeration")
}

/// Ridge least squares min 0.5||x_j - A b||^2 + lambda ||b||^2 over the
/// support columns (j excluded), solved by normal equations without any box.
/// Returns the length-p coefficient vector and the optimal objective.
pub fn dense_ridge(data: &Dataset, j: usize, support: &[usize], lambda: f64) -> (Vec<f64>, f64) {
    let cols: Vec<usize> = support.iter().copied().filter(|&i| i != j).collect();
    let n = data.n;
    let k = cols.len();
    let a = DMatrix::from_fn(n, k, |r, c| data.column(cols[c])[r]);
    let y = DVector::from_fn(n, |r, _| data.column(j)[r]);
    let mut gram = a.transpose() * &a;
    for d in 0..k {
        gram[(d, d)] += 2.0 * lambda;
    }
    let rhs = a.transpose() * &y;
    let sol = gram.lu().solve(&rhs).expect("nonsingular normal equations");
    let resid = &y - &a * &sol;
    let objective = 0.5 * resid.norm_squared() + lambda * sol.norm_squared();
    let mut beta = vec![0.0; data.p];
    for (c, &i) in cols.iter().enumerate() {
        beta[i] = sol[c];
    }
    (beta, objective)
}

pub fn singular_values_dense(b: &Array2<f64>) -> Vec<f64> {
    let (r, c) = b.dim();
    let m = DMatrix::from_fn(r, c, |i, j| b[[i, j]]);
    let mut sv: Vec<f64> = m
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Left singular vector of the largest singular value, first nonzero entry
/// made nonnegative.
pub fn leading_left_singular_dense(b: &Array2<f64>) -> Vec<f64> {
    let (r, c) = b.dim();
    let m = DMatrix::from_fn(r, c, |i, j| b[[i, j]]);
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let mut best = 0;
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] > svd.singular_values[best] {
            best = i;
        }
    }
    let mut v: Vec<f64> = (0..r).map(|i| u[(i, best)]).collect();
    make_first_nonzero_positive(&mut v);
    v
}

/// Unit eigenvector of the algebraically largest eigenvalue of a symmetric
/// matrix, same sign convention.
pub fn leading_eigenvector_sym(m: &Array2<f64>) -> Vec<f64> {
    let p = m.nrows();
    let sym = DMatrix::from_fn(p, p, |i, j| m[[i, j]]);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut best = 0;
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut v: Vec<f64> = (0..p).map(|i| eig.eigenvectors[(i, best)]).collect();
    make_first_nonzero_positive(&mut v);
    v
}

/// Direction of the largest-norm column, unit length, sign-fixed. For a
/// matrix certified (numerically) rank one this is its left singular vector
/// to machine precision, with none of the iterative error a general SVD
/// carries near a repeated zero singular value.
pub fn dominant_column_direction(b: &Array2<f64>) -> Vec<f64> {
    let (r, c) = b.dim();
    let mut best = 0;
    let mut best_sq = f64::NEG_INFINITY;
    for j in 0..c {
        let sq: f64 = (0..r).map(|i| b[[i, j]] * b[[i, j]]).sum();
        if sq > best_sq {
            best_sq = sq;
            best = j;
        }
    }
    let norm = best_sq.sqrt();
    assert!(norm > 0.0, "zero matrix has no direction");
    let mut v: Vec<f64> = (0..r).map(|i| b[[i, best]] / norm).collect();
    make_first_nonzero_positive(&mut v);
    v
}

pub fn make_first_nonzero_positive(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|x| **x != 0.0) {
        if first < 0.0 {
            for y in v.iter_mut() {
                *y = -*y;
            }
        }
    }
}

/// Sine of the angle between two unit vectors, evaluated as the norm of the
/// component of `v` orthogonal to `u`. Equivalent to sqrt(1 - cos^2) but
/// without its ~1e-8 floor from cancellation when the vectors are parallel
/// to machine precision.
pub fn stable_sin_angle(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let res_sq: f64 = u
        .iter()
        .zip(v)
        .map(|(a, b)| {
            let r = b - dot * a;
            r * r
        })
        .sum();
    res_sq.sqrt()
}

pub fn random_master(p: usize, s: usize, n_cuts: usize, rng: &mut ChaCha8Rng) -> MasterProblem {
    let mut mp = MasterProblem::new(p, s);
    for _ in 0..n_cuts {
        let anchor: Vec<bool> = (0..p).map(|_| rng.random_bool(0.5)).collect();
        let value: f64 = rng.random_range(-5.0..5.0);
        let grad = Array1::from_iter((0..p).map(|_| rng.random_range(-3.0..3.0)));
        mp.add_cut(Cut::new(anchor, value, grad));
    }
    mp
}

/// Exhaustive optimum of a master instance under the solver's tie-break
/// (smallest value, then lexicographically smallest sorted support),
/// optionally respecting branch fixings.
pub fn master_enumeration_fixed(
    mp: &MasterProblem,
    fixed_one: &[usize],
    fixed_zero: &[usize],
) -> Option<(f64, Vec<usize>)> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for support in supports_up_to(mp.p, mp.s) {
        if fixed_one.iter().any(|i| !support.contains(i)) {
            continue;
        }
        if fixed_zero.iter().any(|i| support.contains(i)) {
            continue;
        }
        if mp.forced_zero.iter().any(|i| support.contains(i)) {
            continue;
        }
        let value = mp.value_at(&support);
        let better = match &best {
            None => true,
            Some((v, sup)) => value < *v || (value == *v && support < *sup),
        };
        if better {
            best = Some((value, support));
        }
    }
    best
}

pub fn master_enumeration(mp: &MasterProblem) -> (f64, Vec<usize>) {
    master_enumeration_fixed(mp, &[], &[]).expect("nonempty feasible set")
}
