//! Scenario harness: ground-truth generation, estimator driving, metrics,
//! Monte Carlo aggregation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretize::{taylor_expm, taylor_transition_integral, DEFAULT_SERIES_ORDER};
use crate::error::{Error, Result};
use crate::estimators::{
    ekf_step, sckf_correct, sckf_predict, FilterEstimate, NoiseConfig,
};
use crate::model::StateSpaceModel;
use crate::road::{generate_profile, sample_stiffness_timeline, ProfileSpec, RoadProfile, TerrainPath};
use crate::scalar::{lit, Real};
use crate::vehicle::{combined_stiffness, soil_stiffness_from_combined, VehicleParams};

/// Which estimator a scenario runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Sckf,
    Ekf,
}

impl std::str::FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sckf" => Ok(FilterKind::Sckf),
            "ekf" => Ok(FilterKind::Ekf),
            other => Err(Error::Parse(format!("unknown filter {other:?}"))),
        }
    }
}

/// How the initial combined-stiffness guess is formed from the series
/// element (tire or joined stiffness).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuessPolicy {
    /// Guess the *soil* stiffness at half the series element; through the
    /// series map this lands `k_tot0 = k_t/3`.
    SoilHalfSeries,
    /// Guess the combined stiffness itself at half the series element.
    CombinedHalfSeries,
}

impl InitialGuessPolicy {
    pub fn initial_combined<T: Real>(self, series: T) -> T {
        match self {
            InitialGuessPolicy::SoilHalfSeries => {
                combined_stiffness(series / lit::<T>(2.0), series).expect("positive stiffness")
            }
            InitialGuessPolicy::CombinedHalfSeries => series / lit::<T>(2.0),
        }
    }
}

/// Default initial covariance diagonal: motion entries one order above the
/// process noise, a wide prior on the combined stiffness (std 63 kN/m, so
/// the cold-start transient clears the 10 s inspection window quickly).
pub fn default_initial_covariance<T: Real>(order: crate::vehicle::ModelOrder) -> Vec<T> {
    match order {
        crate::vehicle::ModelOrder::TwoDof => {
            vec![lit(1e-4), lit(1e-2), lit(1e-4), lit(1e-2), lit(4e9)]
        }
        crate::vehicle::ModelOrder::OneDofLrv => vec![lit(1e-4), lit(1e-2), lit(4e9)],
    }
}

/// A complete, reproducible experiment description.
#[derive(Clone, Debug)]
pub struct Scenario<T: Real> {
    pub vehicle: VehicleParams<T>,
    pub path: TerrainPath<T>,
    pub profile: ProfileSpec<T>,
    pub velocity: T,
    pub dt: T,
    pub duration: T,
    pub noise: NoiseConfig<T>,
    pub seed: u64,
    pub filter: FilterKind,
    pub initial_guess: InitialGuessPolicy,
    pub initial_covariance_diag: Vec<T>,
    /// RMSE inspection window; `None` applies the default rule (first 10 s
    /// when the run is at least that long, otherwise the full run).
    pub rmse_window: Option<T>,
    /// Adaptation threshold in percent.
    pub adaptation_threshold_pct: T,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        vehicle: VehicleParams<T>,
        path: TerrainPath<T>,
        profile: ProfileSpec<T>,
        velocity: T,
        dt: T,
        noise: NoiseConfig<T>,
        seed: u64,
        filter: FilterKind,
    ) -> Result<Self> {
        let duration = path.total_duration();
        let scenario = Scenario {
            initial_covariance_diag: default_initial_covariance(vehicle.model_order),
            vehicle,
            path,
            profile,
            velocity,
            dt,
            duration,
            noise,
            seed,
            filter,
            initial_guess: InitialGuessPolicy::SoilHalfSeries,
            rmse_window: None,
            adaptation_threshold_pct: lit(5.0),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dt <= T::zero() {
            return Err(Error::Scenario("dt must be positive".into()));
        }
        if self.duration < self.dt {
            return Err(Error::Scenario("duration must be at least dt".into()));
        }
        if self.velocity < T::zero() {
            return Err(Error::Scenario("velocity must be nonnegative".into()));
        }
        let n = self.vehicle.state_dim();
        if self.noise.q_diag.len() != n {
            return Err(Error::Scenario(format!(
                "process noise has {} entries, model needs {n}",
                self.noise.q_diag.len()
            )));
        }
        if self.noise.r_diag.len() != self.vehicle.measurement_dim() {
            return Err(Error::Scenario(format!(
                "measurement noise has {} entries, model needs {}",
                self.noise.r_diag.len(),
                self.vehicle.measurement_dim()
            )));
        }
        if self.initial_covariance_diag.len() != n {
            return Err(Error::Scenario(
                "initial covariance diagonal does not match the state dimension".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_filter(mut self, filter: FilterKind) -> Self {
        self.filter = filter;
        self
    }

    pub fn with_duration(mut self, duration: T) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_initial_guess(mut self, policy: InitialGuessPolicy) -> Self {
        self.initial_guess = policy;
        self
    }

    pub fn with_initial_covariance(mut self, diag: Vec<T>) -> Self {
        self.initial_covariance_diag = diag;
        self
    }

    pub fn sample_count(&self) -> usize {
        let steps = (self.duration / self.dt).to_f64().unwrap().round() as usize;
        steps + 1
    }

    fn rmse_window_samples(&self, n: usize) -> usize {
        let window = match self.rmse_window {
            Some(w) => w,
            None => {
                let ten = lit::<T>(10.0);
                if self.duration >= ten {
                    ten
                } else {
                    self.duration
                }
            }
        };
        let steps = (window / self.dt).to_f64().unwrap().round() as usize;
        (steps + 1).min(n)
    }

    /// Combined-stiffness truth at each sample along the path.
    pub fn combined_truth(&self) -> Vec<T> {
        let series = self.vehicle.series_stiffness();
        sample_stiffness_timeline(&self.path, self.dt, self.sample_count())
            .into_iter()
            .map(|ks| combined_stiffness(ks, series).expect("positive stiffness"))
            .collect()
    }
}

/// Ground truth: clean state trajectory and the noisy accelerations the
/// estimator will see.
#[derive(Clone, Debug)]
pub struct TruthData<T: Real> {
    pub profile: RoadProfile<T>,
    pub ks_true: Vec<T>,
    pub states: Vec<DVector<T>>,
    pub measurements: Vec<DVector<T>>,
}

/// Integrate the discrete model at the true stiffness of each segment,
/// inject seeded process noise of exactly the filter's per-step covariance,
/// and corrupt the acceleration readings with the measurement noise.
pub fn simulate_truth<T: Real>(scenario: &Scenario<T>) -> Result<TruthData<T>> {
    scenario.validate()?;
    let n_samples = scenario.sample_count();
    let profile = generate_profile(
        &scenario.profile.clone().with_seed(scenario.seed),
        scenario.velocity,
        scenario.duration,
        scenario.dt,
    )?;
    let ks_true = sample_stiffness_timeline(&scenario.path, scenario.dt, n_samples);
    let series = scenario.vehicle.series_stiffness();
    let k_tot_of = |ks: T| combined_stiffness(ks, series).expect("positive stiffness");

    let model = &scenario.vehicle;
    let n = model.state_dim();
    let p = model.measurement_dim();
    let last = n - 1;
    let dt = scenario.dt;

    // separate stream from the road phases
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed ^ 0x9E37_79B9_7F4A_7C15);
    let r_std: Vec<T> = scenario
        .noise
        .r_diag
        .iter()
        .map(|&r| r.sqrt())
        .collect();
    let zero_q = scenario.noise.q_diag.iter().all(|&q| q == T::zero());

    let feed = model.feedthrough();
    let mut states = Vec::with_capacity(n_samples);
    let mut measurements = Vec::with_capacity(n_samples);

    let mut x = DVector::zeros(n);
    x[last] = k_tot_of(ks_true[0]);

    let measure = |x: &DVector<T>, u: T, rng: &mut ChaCha8Rng| -> DVector<T> {
        let c = model.continuous(x).c;
        let mut z = c * x + &feed * u;
        for i in 0..p {
            z[i] += r_std[i] * lit::<T>(rng.sample::<f64, _>(rand_distr::StandardNormal));
        }
        z
    };

    states.push(x.clone());
    measurements.push(measure(&x, profile.samples_hdot[0], &mut rng));

    for k in 0..n_samples - 1 {
        x[last] = k_tot_of(ks_true[k]);
        let cont = model.continuous(&x);
        let ak = taylor_expm(&cont.a, dt, DEFAULT_SERIES_ORDER);
        let integral = taylor_transition_integral(&cont.a, dt, DEFAULT_SERIES_ORDER);
        let bk = &integral * &cont.b;
        let mut next = &ak * &x + bk * profile.samples_hdot[k];

        if !zero_q {
            let qk = crate::estimators::process_noise_covariance(
                model,
                &x,
                &scenario.noise,
                dt,
            );
            let sqrt_qk = crate::estimators::sqrt_covariance(&qk);
            let noise_vec = DVector::from_fn(n, |_, _| {
                lit::<T>(rng.sample::<f64, _>(rand_distr::StandardNormal))
            });
            next += sqrt_qk * noise_vec;
        }

        next[last] = k_tot_of(ks_true[k + 1]);
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::Scenario(format!(
                "truth trajectory became non-finite at step {k}"
            )));
        }
        x = next;
        states.push(x.clone());
        measurements.push(measure(&x, profile.samples_hdot[k + 1], &mut rng));
    }

    Ok(TruthData {
        profile,
        ks_true,
        states,
        measurements,
    })
}

/// Estimation output over one run.
#[derive(Clone, Debug)]
pub struct EstimationResult<T: Real> {
    pub t: Vec<T>,
    pub ks_true: Vec<T>,
    pub ks_est: Vec<T>,
    pub k_tot_est: Vec<T>,
    pub state_true: Vec<DVector<T>>,
    pub state_est: Vec<DVector<T>>,
    pub rel_error_pct: Vec<T>,
    pub rmse_pct: T,
    pub adaptation_window_s: Option<T>,
    pub diverged: bool,
    pub diverged_at: Option<usize>,
}

fn soil_estimate<T: Real>(k_tot: T, series: T) -> T {
    // keep the series inverse on its branch: a combined stiffness at or
    // beyond 99% of the series element reads as an effectively rigid soil
    // (99x the series element), anything nonpositive as vanishing soil
    let floor = series * lit::<T>(1e-9);
    let ceiling = series * lit::<T>(0.99);
    let clamped = k_tot.max(floor).min(ceiling);
    soil_stiffness_from_combined(clamped, series).expect("clamped into the series branch")
}

/// Run the configured filter over a simulated truth.
pub fn run_estimation<T: Real>(scenario: &Scenario<T>) -> Result<EstimationResult<T>> {
    let truth = simulate_truth(scenario)?;
    run_estimation_against(scenario, &truth)
}

/// Run the filter against an existing truth realization (used to compare
/// filters on identical seeds without regenerating the data).
pub fn run_estimation_against<T: Real>(
    scenario: &Scenario<T>,
    truth: &TruthData<T>,
) -> Result<EstimationResult<T>> {
    scenario.validate()?;
    let model = &scenario.vehicle;
    let n = model.state_dim();
    let last = n - 1;
    let n_samples = truth.states.len();
    let dt = scenario.dt;
    let series = model.series_stiffness();
    let divergence_bound = series * lit::<T>(10.0);
    let feed = model.feedthrough();

    let k_tot0 = scenario.initial_guess.initial_combined(series);
    let mut mean = DVector::zeros(n);
    mean[last] = k_tot0;

    let mut sckf_state = FilterEstimate::from_diagonal_covariance(
        mean.clone(),
        &scenario.initial_covariance_diag,
    );
    let mut ekf_cov = DMatrix::from_diagonal(&DVector::from_vec(
        scenario.initial_covariance_diag.clone(),
    ));
    let mut ekf_mean = mean.clone();

    let mut k_tot_est = Vec::with_capacity(n_samples);
    let mut state_est = Vec::with_capacity(n_samples);
    k_tot_est.push(k_tot0);
    state_est.push(mean.clone());

    let mut diverged = false;
    let mut diverged_at = None;

    for k in 1..n_samples {
        if diverged {
            k_tot_est.push(*k_tot_est.last().unwrap());
            state_est.push(state_est.last().unwrap().clone());
            continue;
        }
        let u_predict = truth.profile.samples_hdot[k - 1];
        let u_now = truth.profile.samples_hdot[k];
        let z = &truth.measurements[k] - &feed * u_now;

        let stepped: Result<DVector<T>> = match scenario.filter {
            FilterKind::Sckf => {
                let predicted =
                    sckf_predict(&sckf_state, model, u_predict, &scenario.noise, dt)?;
                match sckf_correct(&predicted, &z, model, &scenario.noise) {
                    Ok(updated) => {
                        sckf_state = updated;
                        Ok(sckf_state.mean.clone())
                    }
                    Err(e) => Err(e),
                }
            }
            FilterKind::Ekf => {
                match ekf_step(&ekf_mean, &ekf_cov, &z, u_predict, model, &scenario.noise, dt) {
                    Ok((m, p)) => {
                        ekf_mean = m;
                        ekf_cov = p;
                        Ok(ekf_mean.clone())
                    }
                    Err(e) => Err(e),
                }
            }
        };

        match stepped {
            Ok(state) => {
                let runaway = state[last].abs() > divergence_bound;
                if !state.iter().all(|v| v.is_finite()) || runaway {
                    diverged = true;
                    diverged_at = Some(k);
                    k_tot_est.push(*k_tot_est.last().unwrap());
                    state_est.push(state_est.last().unwrap().clone());
                } else {
                    k_tot_est.push(state[last]);
                    state_est.push(state.clone());
                }
            }
            Err(Error::Diverged(_)) => {
                diverged = true;
                diverged_at = Some(k);
                k_tot_est.push(*k_tot_est.last().unwrap());
                state_est.push(state_est.last().unwrap().clone());
            }
            Err(e) => return Err(e),
        }
    }

    let t: Vec<T> = (0..n_samples)
        .map(|k| dt * T::from_usize(k).unwrap())
        .collect();
    let ks_est: Vec<T> = k_tot_est.iter().map(|&k| soil_estimate(k, series)).collect();
    let rel_error_pct: Vec<T> = ks_est
        .iter()
        .zip(truth.ks_true.iter())
        .map(|(&est, &truth)| lit::<T>(100.0) * (est - truth) / truth)
        .collect();

    // the t = 0 entry is the prior guess, produced before any measurement;
    // score the window over the estimates that saw data
    let window = scenario.rmse_window_samples(n_samples);
    let rmse_pct = if window > 1 {
        let sum = rel_error_pct[1..window]
            .iter()
            .fold(T::zero(), |acc, &e| acc + e * e);
        (sum / T::from_usize(window - 1).unwrap()).sqrt()
    } else {
        T::zero()
    };

    let adaptation_window_s =
        adaptation_window(&rel_error_pct, &t, scenario.adaptation_threshold_pct)?;

    Ok(EstimationResult {
        t,
        ks_true: truth.ks_true.clone(),
        ks_est,
        k_tot_est,
        state_true: truth.states.clone(),
        state_est,
        rel_error_pct,
        rmse_pct,
        adaptation_window_s,
        diverged,
        diverged_at,
    })
}

/// Earliest time after which the relative error stays below the threshold
/// for the rest of the run; `None` if it never settles.
pub fn adaptation_window<T: Real>(
    rel_error_pct: &[T],
    t: &[T],
    threshold_pct: T,
) -> Result<Option<T>> {
    if rel_error_pct.is_empty() || rel_error_pct.len() != t.len() {
        return Err(Error::domain(
            "adaptation window needs aligned, non-empty arrays",
        ));
    }
    let mut last_violation = None;
    for (i, &e) in rel_error_pct.iter().enumerate() {
        if !(e.abs() < threshold_pct) {
            last_violation = Some(i);
        }
    }
    Ok(match last_violation {
        None => Some(t[0]),
        Some(i) if i + 1 < t.len() => Some(t[i + 1]),
        Some(_) => None,
    })
}

/// Aggregate of a Monte Carlo batch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonteCarloStats<T> {
    pub mean_rmse_pct: T,
    pub std_rmse_pct: T,
    pub diverged_count: usize,
    pub runs: Vec<RunSummary<T>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary<T> {
    pub seed: u64,
    pub rmse_pct: T,
    pub adaptation_window_s: Option<T>,
    pub diverged: bool,
}

/// Run the scenario `n_runs` times on consecutive seeds (fresh road and
/// noise realizations each) and aggregate. Diverged runs are excluded from
/// the moments but counted.
pub fn monte_carlo<T: Real + Send + Sync>(
    scenario: &Scenario<T>,
    n_runs: usize,
) -> Result<MonteCarloStats<T>> {
    if n_runs == 0 {
        return Err(Error::domain("monte_carlo needs at least one run"));
    }
    let runs: Result<Vec<RunSummary<T>>> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let seed = scenario.seed + i as u64;
            let result = run_estimation(&scenario.clone().with_seed(seed))?;
            Ok(RunSummary {
                seed,
                rmse_pct: result.rmse_pct,
                adaptation_window_s: result.adaptation_window_s,
                diverged: result.diverged,
            })
        })
        .collect();
    let runs = runs?;
    Ok(summarize_runs(runs))
}

fn summarize_runs<T: Real>(runs: Vec<RunSummary<T>>) -> MonteCarloStats<T> {
    let valid: Vec<T> = runs
        .iter()
        .filter(|r| !r.diverged && r.rmse_pct.is_finite())
        .map(|r| r.rmse_pct)
        .collect();
    let diverged_count = runs.len() - valid.len();
    let (mean, std) = if valid.is_empty() {
        (T::zero(), T::zero())
    } else {
        let n = T::from_usize(valid.len()).unwrap();
        let mean = valid.iter().fold(T::zero(), |a, &b| a + b) / n;
        let std = if valid.len() > 1 {
            let ss = valid
                .iter()
                .fold(T::zero(), |a, &b| a + (b - mean) * (b - mean));
            (ss / (n - T::one())).sqrt()
        } else {
            T::zero()
        };
        (mean, std)
    };
    MonteCarloStats {
        mean_rmse_pct: mean,
        std_rmse_pct: std,
        diverged_count,
        runs,
    }
}

/// Sweep axis for the excitation sensitivity study.
#[derive(Clone, Debug)]
pub enum SweepAxis<T> {
    IsoClass(Vec<crate::road::IsoClass>),
    Velocity(Vec<T>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepPoint<T> {
    pub label: String,
    pub mean_error_pct: T,
    pub std_error_pct: T,
    pub mean_adaptation_s: Option<T>,
    pub diverged_count: usize,
}

/// One Monte Carlo batch per axis value.
pub fn sensitivity_sweep<T: Real + Send + Sync>(
    base: &Scenario<T>,
    axis: &SweepAxis<T>,
    n_runs: usize,
) -> Result<Vec<SweepPoint<T>>> {
    let scenarios: Vec<(String, Scenario<T>)> = match axis {
        SweepAxis::IsoClass(classes) => {
            if classes.is_empty() {
                return Err(Error::domain("sweep needs at least one value"));
            }
            classes
                .iter()
                .map(|&class| {
                    let mut s = base.clone();
                    s.profile = ProfileSpec::iso(class, s.profile.seed);
                    (format!("ISO {class:?}"), s)
                })
                .collect()
        }
        SweepAxis::Velocity(velocities) => {
            if velocities.is_empty() {
                return Err(Error::domain("sweep needs at least one value"));
            }
            velocities
                .iter()
                .map(|&v| {
                    let mut s = base.clone();
                    s.velocity = v;
                    (
                        format!("{} m/s", v.to_f64().unwrap()),
                        s,
                    )
                })
                .collect()
        }
    };

    scenarios
        .into_iter()
        .map(|(label, scenario)| {
            let stats = monte_carlo(&scenario, n_runs)?;
            let adapted: Vec<T> = stats
                .runs
                .iter()
                .filter_map(|r| r.adaptation_window_s)
                .collect();
            let mean_adaptation_s = if adapted.is_empty() {
                None
            } else {
                Some(
                    adapted.iter().fold(T::zero(), |a, &b| a + b)
                        / T::from_usize(adapted.len()).unwrap(),
                )
            };
            Ok(SweepPoint {
                label,
                mean_error_pct: stats.mean_rmse_pct,
                std_error_pct: stats.std_rmse_pct,
                mean_adaptation_s,
                diverged_count: stats.diverged_count,
            })
        })
        .collect()
}
