//! Estimator-level properties: linear-Gaussian equivalence against the
//! textbook filter, square-root consistency along real runs, and the
//! stiffness-map algebra under proptest.

mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_stable_system, single_terrain_scenario, KalmanOracle, GRANEVILLE};
use terrakf::discretize::discretize;
use terrakf::estimators::{
    cubature_points, ekf_step, sckf_correct, sckf_predict, FilterEstimate, NoiseConfig, QkModel,
};
use terrakf::model::StateSpaceModel;
use terrakf::road::IsoClass;
use terrakf::sim::simulate_truth;
use terrakf::vehicle::{combined_stiffness, soil_stiffness_from_combined};

/// On a linear system both filters must coincide with the closed-form
/// Kalman recursion.
#[test]
fn filters_match_kalman_oracle_on_random_linear_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..20 {
        let n = rng.gen_range(2..=5);
        let p = rng.gen_range(1..=2.min(n));
        let system = random_stable_system(&mut rng, n, p);
        let dt = 0.05;

        let q_diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.001..0.05)).collect();
        let r_diag: Vec<f64> = (0..p).map(|_| rng.gen_range(0.05..0.5)).collect();
        let noise = NoiseConfig::new(q_diag, r_diag, QkModel::ScaledGain).unwrap();

        let cont = system.continuous(&DVector::zeros(n));
        let disc = discretize(&cont, &noise.q_matrix(), &noise.r_matrix(), dt);

        let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let p0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();

        let mut oracle = KalmanOracle {
            ak: disc.ak.clone(),
            bk: disc.bk.clone(),
            ck: disc.ck.clone(),
            qk: disc.qk.clone(),
            rk: disc.rk.clone(),
            mean: x0.clone(),
            cov: DMatrix::from_diagonal(&DVector::from_vec(p0.clone())),
        };
        let mut sr = FilterEstimate::from_diagonal_covariance(x0.clone(), &p0);
        let mut ekf_mean = x0.clone();
        let mut ekf_cov = DMatrix::from_diagonal(&DVector::from_vec(p0.clone()));

        // simulate a measurement stream from the true discrete system
        let mut x_true = x0.clone();
        for step in 0..200 {
            let u = (0.1 * step as f64).sin();
            x_true = &disc.ak * &x_true + &disc.bk * u;
            let mut z = &disc.ck * &x_true;
            for i in 0..p {
                z[i] += 0.1 * ((step * (i + 3)) as f64).sin();
            }

            oracle.step(&z, u);
            let pred = sckf_predict(&sr, &system, u, &noise, dt).unwrap();
            sr = sckf_correct(&pred, &z, &system, &noise).unwrap();
            let (m, c) = ekf_step(&ekf_mean, &ekf_cov, &z, u, &system, &noise, dt).unwrap();
            ekf_mean = m;
            ekf_cov = c;

            let mean_scale = oracle.mean.norm().max(1e-6);
            let cov_scale = oracle.cov.norm().max(1e-12);
            assert!(
                (&sr.mean - &oracle.mean).norm() / mean_scale < 1e-8,
                "trial {trial} step {step}: sckf mean drift"
            );
            assert!(
                (&sr.covariance() - &oracle.cov).norm() / cov_scale < 1e-8,
                "trial {trial} step {step}: sckf covariance drift"
            );
            assert!(
                (&ekf_mean - &oracle.mean).norm() / mean_scale < 1e-8,
                "trial {trial} step {step}: ekf mean drift"
            );
            assert!(
                (&ekf_cov - &oracle.cov).norm() / cov_scale < 1e-8,
                "trial {trial} step {step}: ekf covariance drift"
            );
        }
    }
}

/// Along a real nonlinear run the square-root factor must always
/// reconstruct a symmetric PSD covariance.
#[test]
fn square_root_factor_stays_psd_throughout_a_run() {
    let scenario = single_terrain_scenario(GRANEVILLE, IsoClass::D, 10.0, 5.0, 4);
    let truth = simulate_truth(&scenario).unwrap();
    let params = scenario.vehicle;
    let series = 175.0e3;
    let mut mean = DVector::zeros(5);
    mean[4] = series / 3.0;
    let mut est =
        FilterEstimate::from_diagonal_covariance(mean, &scenario.initial_covariance_diag);

    for k in 1..truth.states.len() {
        let u = truth.profile.samples_hdot[k - 1];
        let pred = sckf_predict(&est, &params, u, &scenario.noise, scenario.dt).unwrap();
        check_psd(&pred, "predict", k);
        est = sckf_correct(&pred, &truth.measurements[k], &params, &scenario.noise).unwrap();
        check_psd(&est, "correct", k);
    }
}

fn check_psd(est: &FilterEstimate<f64>, stage: &str, step: usize) {
    let p = est.covariance();
    let asym = (&p - p.transpose()).norm();
    assert!(
        asym < 1e-12 * p.norm(),
        "{stage} step {step}: asymmetry {asym:e}"
    );
    let eig = p.clone().symmetric_eigen().eigenvalues;
    let floor = -1e-10 * p.trace();
    assert!(
        eig.iter().all(|&l| l >= floor),
        "{stage} step {step}: eigenvalues {:?}",
        eig.as_slice()
    );
    // triangular by construction
    for i in 0..est.sqrt_cov.nrows() {
        for j in (i + 1)..est.sqrt_cov.ncols() {
            assert_eq!(est.sqrt_cov[(i, j)], 0.0);
        }
        assert!(est.sqrt_cov[(i, i)] >= 0.0);
    }
}

/// Cubature moment exactness on the estimates a real run produces.
#[test]
fn cubature_set_reproduces_mean_and_covariance() {
    let scenario = single_terrain_scenario(GRANEVILLE, IsoClass::D, 10.0, 1.0, 9);
    let truth = simulate_truth(&scenario).unwrap();
    let params = scenario.vehicle;
    let mut mean = DVector::zeros(5);
    mean[4] = 175.0e3 / 3.0;
    let mut est =
        FilterEstimate::from_diagonal_covariance(mean, &scenario.initial_covariance_diag);
    for k in 1..truth.states.len() {
        let pred = sckf_predict(
            &est,
            &params,
            truth.profile.samples_hdot[k - 1],
            &scenario.noise,
            scenario.dt,
        )
        .unwrap();
        est = sckf_correct(&pred, &truth.measurements[k], &params, &scenario.noise).unwrap();

        let set = cubature_points(&est);
        assert_eq!(set.len(), 10);
        let m = set.mean();
        let scale = est.mean.norm().max(1.0);
        assert!((&m - &est.mean).norm() <= 1e-10 * scale);
        let cov = set.covariance();
        let p = est.covariance();
        assert!((&cov - &p).norm() <= 1e-10 * p.norm().max(1e-30));
    }
}

proptest! {
    /// Series combination is symmetric and below both elements; the
    /// inverse map round-trips.
    #[test]
    fn stiffness_series_algebra(ks in 1e3f64..1e7, kt in 1e3f64..1e7) {
        let ab = combined_stiffness(ks, kt).unwrap();
        let ba = combined_stiffness(kt, ks).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab);
        prop_assert!(ab < ks.min(kt));
        let back = soil_stiffness_from_combined(ab, kt).unwrap();
        prop_assert!((back - ks).abs() <= 1e-12 * ks.max(back));
    }

    /// The permanent-threshold window definition, checked against a direct
    /// scan of the definition.
    #[test]
    fn adaptation_window_matches_definition(
        errors in proptest::collection::vec(-20.0f64..20.0, 2..60),
        threshold in 1.0f64..10.0,
    ) {
        let t: Vec<f64> = (0..errors.len()).map(|i| i as f64 * 0.5).collect();
        let window = terrakf::sim::adaptation_window(&errors, &t, threshold).unwrap();
        match window {
            Some(w) => {
                let idx = (w / 0.5).round() as usize;
                prop_assert!(errors[idx..].iter().all(|e| e.abs() < threshold));
                if idx > 0 {
                    prop_assert!(errors[idx - 1].abs() >= threshold);
                }
            }
            None => prop_assert!(errors.last().unwrap().abs() >= threshold),
        }
    }
}
