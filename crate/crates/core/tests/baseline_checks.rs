//! Behavioral checks for the reference methods: objective monotonicity of
//! the truncated power iterates, agreement with dense eigensolvers, and
//! threshold monotonicity.

mod common;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spca_core::baselines::{covariance_thresholding, truncated_power_method};
use spca_core::model::{make_model, sample_data, sin_angle};

#[test]
fn truncated_power_objective_is_nondecreasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for trial in 0..50 {
        let p = rng.random_range(6..=10);
        let n = rng.random_range(20..=40);
        let s = rng.random_range(2..=3);
        let data = common::random_dataset(n, p, 7000 + trial);
        let sigma = data.x().t().dot(data.x()) / n as f64;
        let mut init = vec![0.0; p];
        init[rng.random_range(0..p)] = 1.0;

        let mut last = f64::NEG_INFINITY;
        for k in 1..=8 {
            let res = truncated_power_method(&data, s, &init, k, 0.0).expect("tpm");
            let value = res.u_hat.dot(&sigma.dot(&res.u_hat));
            assert!(
                value >= last - 1e-9,
                "trial {trial} iteration {k}: {value} dropped below {last}"
            );
            last = value;
        }
    }
}

#[test]
fn truncated_power_is_invariant_to_flipping_the_start() {
    let model = make_model(8, 3, 1.0, 51).expect("model");
    let data = sample_data(&model, 60, 52).expect("data");
    let mut init = vec![0.0; 8];
    init[2] = 1.0;
    let plus = truncated_power_method(&data, 3, &init, 300, 1e-10).expect("tpm");
    init[2] = -1.0;
    let minus = truncated_power_method(&data, 3, &init, 300, 1e-10).expect("tpm");
    assert_eq!(plus.support, minus.support);
    for i in 0..8 {
        assert!((plus.u_hat[i] - minus.u_hat[i]).abs() <= 1e-12);
    }
}

#[test]
fn zero_alpha_reduces_to_plain_pca() {
    let data = common::random_dataset(60, 7, 61);
    let res = covariance_thresholding(&data, 2, 0.0).expect("covthresh");
    let sigma = data.x().t().dot(data.x()) / 60.0;
    let dense = common::leading_eigenvector_sym(&sigma);
    let angle = sin_angle(res.u_hat.as_slice().expect("contiguous"), &dense).expect("unit");
    assert!(angle <= 1e-6, "sin angle {angle}");
}

#[test]
fn raising_alpha_never_keeps_more_entries() {
    let data = common::random_dataset(80, 10, 71);
    let sigma = data.x().t().dot(data.x()) / 80.0;
    let s = 2;
    let mut last_surviving = usize::MAX;
    for alpha in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let tau = alpha * ((10.0f64 / (s * s) as f64).ln() / 80.0).sqrt();
        let surviving = (0..10)
            .flat_map(|i| (0..10).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && sigma[[i, j]].abs() >= tau)
            .count();
        assert!(surviving <= last_surviving, "alpha {alpha}");
        last_surviving = surviving;
    }
}

#[test]
fn thresholding_estimates_a_planted_direction_at_desk_scale() {
    let mut angles = Vec::new();
    for rep in 0..10 {
        let model = make_model(100, 5, 1.0, 900 + rep).expect("model");
        let data = sample_data(&model, 2000, 950 + rep).expect("data");
        let res = covariance_thresholding(&data, 5, 2.0).expect("covthresh");
        let angle = sin_angle(
            res.u_hat.as_slice().expect("contiguous"),
            model.u_star.as_slice().expect("contiguous"),
        )
        .expect("unit");
        angles.push(angle);
    }
    angles.sort_by(f64::total_cmp);
    let median = 0.5 * (angles[4] + angles[5]);
    assert!(median < 0.6, "median sin angle {median}");
}
