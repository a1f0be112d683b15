//! The truth integrator against a fine-step reference, and filter tracking
//! consistency when the model is exact.

mod common;

use nalgebra::DVector;

use common::{offroad_vehicle, single_terrain_scenario, GRANEVILLE};
use terrakf::discretize::{taylor_expm, taylor_transition_integral};
use terrakf::estimators::{
    sckf_correct, sckf_predict, FilterEstimate, NoiseConfig, QkModel,
};
use terrakf::model::StateSpaceModel;
use terrakf::road::IsoClass;
use terrakf::sim::simulate_truth;
use terrakf::vehicle::combined_stiffness;

/// Reference: the same held-input system integrated with 100 substeps per
/// sample interval. Isolates the transition-series truncation error.
#[test]
fn truth_matches_fine_step_reference_integration() {
    let mut scenario = single_terrain_scenario(GRANEVILLE, IsoClass::D, 10.0, 10.0, 7);
    scenario.noise = NoiseConfig::new(vec![0.0; 5], vec![0.0, 0.0], QkModel::ScaledGain).unwrap();
    let truth = simulate_truth(&scenario).unwrap();

    let params = offroad_vehicle();
    let k_tot = combined_stiffness(GRANEVILLE, 175.0e3).unwrap();
    let mut x = DVector::zeros(5);
    x[4] = k_tot;
    let cont = params.continuous(&x);
    let substeps = 100;
    let dt_fine = scenario.dt / substeps as f64;
    let ak = taylor_expm(&cont.a, dt_fine, 4);
    let bk = taylor_transition_integral(&cont.a, dt_fine, 4) * &cont.b;

    let n = truth.states.len();
    let mut reference = Vec::with_capacity(n);
    reference.push(x.clone());
    for k in 0..n - 1 {
        let u = truth.profile.samples_hdot[k];
        for _ in 0..substeps {
            x = &ak * &x + &bk * u;
        }
        reference.push(x.clone());
    }

    // per-component: max |error| below 1% of the component's RMS
    for i in 0..4 {
        let rms = (truth.states.iter().map(|s| s[i] * s[i]).sum::<f64>() / n as f64).sqrt();
        let max_err = truth
            .states
            .iter()
            .zip(reference.iter())
            .map(|(a, b)| (a[i] - b[i]).abs())
            .fold(0.0f64, f64::max);
        assert!(
            max_err < 0.01 * rms,
            "state {i}: max err {max_err:e} vs rms {rms:e}"
        );
    }
}

/// With zero measurement noise, no stiffness random walk, and the filter
/// started at the true stiffness, the state estimates must hug the truth.
#[test]
fn filter_tracks_truth_when_model_is_exact() {
    let mut scenario = single_terrain_scenario(GRANEVILLE, IsoClass::D, 10.0, 10.0, 11);
    scenario.noise = NoiseConfig::new(
        vec![1e-5, 1e-3, 1e-5, 1e-3, 0.0],
        vec![0.0, 0.0],
        QkModel::ScaledGain,
    )
    .unwrap();
    let truth = simulate_truth(&scenario).unwrap();

    let params = scenario.vehicle;
    let k_tot = combined_stiffness(GRANEVILLE, 175.0e3).unwrap();
    let mut mean = DVector::zeros(5);
    mean[4] = k_tot;
    let mut est = FilterEstimate::from_diagonal_covariance(mean, &[1e-4, 1e-2, 1e-4, 1e-2, 1.0]);

    let n = truth.states.len();
    let mut est_states = Vec::with_capacity(n);
    est_states.push(est.mean.clone());
    for k in 1..n {
        let u = truth.profile.samples_hdot[k - 1];
        let pred = sckf_predict(&est, &params, u, &scenario.noise, scenario.dt).unwrap();
        est = sckf_correct(&pred, &truth.measurements[k], &params, &scenario.noise).unwrap();
        est_states.push(est.mean.clone());
    }

    for i in 0..4 {
        let mut ss_err = 0.0;
        let mut ss_truth = 0.0;
        for k in 0..n {
            let e = est_states[k][i] - truth.states[k][i];
            ss_err += e * e;
            ss_truth += truth.states[k][i] * truth.states[k][i];
        }
        let rel = (ss_err / ss_truth.max(1e-300)).sqrt();
        assert!(rel < 0.01, "state {i}: relative tracking rms {rel:e}");
    }
}
