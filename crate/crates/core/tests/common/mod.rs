//! Shared test oracles, independent of the implementation paths they check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use terrakf::estimators::NoiseConfig;
use terrakf::model::LinearStateSpace;
use terrakf::road::{IsoClass, ProfileSpec, TerrainPath};
use terrakf::sim::{FilterKind, Scenario};
use terrakf::vehicle::{TerrainEntry, VehicleParams};

/// Reference matrix exponential: scaling-and-squaring with an order-13
/// Taylor series on the scaled matrix.
pub fn reference_expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().map(|x| x.abs()).fold(0.0f64, f64::max) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for j in 1..=13 {
        term = (&term * &scaled) / j as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Textbook covariance-form Kalman filter for a linear discrete system:
/// the oracle the square-root and Jacobian paths must reproduce.
pub struct KalmanOracle {
    pub ak: DMatrix<f64>,
    pub bk: DVector<f64>,
    pub ck: DMatrix<f64>,
    pub qk: DMatrix<f64>,
    pub rk: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl KalmanOracle {
    pub fn step(&mut self, z: &DVector<f64>, u: f64) {
        let n = self.mean.len();
        // predict
        let xp = &self.ak * &self.mean + &self.bk * u;
        let pp = &self.ak * &self.cov * self.ak.transpose() + &self.qk;
        // correct
        let s = &self.ck * &pp * self.ck.transpose() + &self.rk;
        let w = &pp * self.ck.transpose() * s.try_inverse().expect("innovation invertible");
        self.mean = &xp + &w * (z - &self.ck * &xp);
        self.cov = (DMatrix::identity(n, n) - &w * &self.ck) * &pp;
    }
}

/// Random stable continuous system with measurement rows, for the
/// linear-equivalence checks.
pub fn random_stable_system(
    rng: &mut impl rand::Rng,
    n: usize,
    p: usize,
) -> LinearStateSpace<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = if i == j {
                -rng.gen_range(0.5..3.0)
            } else {
                rng.gen_range(-0.3..0.3)
            };
        }
    }
    let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let g = DMatrix::identity(n, n);
    let c = DMatrix::from_fn(p, n, |_, _| rng.gen_range(-1.0..1.0));
    LinearStateSpace { a, b, g, c }
}

pub fn offroad_vehicle() -> VehicleParams<f64> {
    VehicleParams::offroad_reference()
}

pub fn terrain(name: &str, ks: f64) -> TerrainEntry<f64> {
    TerrainEntry::new(name, ks).unwrap()
}

/// Single-terrain scenario on the reference vehicle with default noise and
/// initial covariance.
pub fn single_terrain_scenario(
    ks: f64,
    class: IsoClass,
    velocity: f64,
    duration: f64,
    seed: u64,
) -> Scenario<f64> {
    Scenario::new(
        offroad_vehicle(),
        TerrainPath::single(terrain("test terrain", ks), duration).unwrap(),
        ProfileSpec::iso(class, seed),
        velocity,
        0.01,
        NoiseConfig::default_two_dof(),
        seed,
        FilterKind::Sckf,
    )
    .unwrap()
}

pub const GRANEVILLE: f64 = 651.1e3;
pub const LETE_SAND: f64 = 2283.0e3;
pub const UPLAND: f64 = 218.1e3;
pub const REGOLITH: f64 = 28_487.0;

/// Octave-band periodogram check of the road synthesis: returns the worst
/// measured/target band-power ratio over the interior octaves, averaged
/// over seeds.
pub fn road_psd_worst_octave_ratio(
    base: &ProfileSpec<f64>,
    velocity: f64,
    duration: f64,
    dt: f64,
    n_seeds: u64,
) -> (f64, f64) {
    use rustfft::{num_complex::Complex, FftPlanner};
    use terrakf::road::generate_profile;

    let n_samples = ((duration / dt).round() as usize / 1000) * 1000;
    let fs = 1.0 / dt;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n_samples);

    let mut avg_psd = vec![0.0f64; n_samples / 2];
    for seed in 0..n_seeds {
        let profile =
            generate_profile(&base.clone().with_seed(seed), velocity, duration, dt).unwrap();
        let mut buf: Vec<Complex<f64>> = profile.samples_h[..n_samples]
            .iter()
            .map(|&h| Complex::new(h, 0.0))
            .collect();
        fft.process(&mut buf);
        for (j, value) in buf.iter().enumerate().take(n_samples / 2).skip(1) {
            avg_psd[j] += 2.0 * value.norm_sqr() / (fs * n_samples as f64);
        }
    }
    for v in &mut avg_psd {
        *v /= n_seeds as f64;
    }

    let n_min = base.spatial_band[0];
    let n_max = base.spatial_band[1];
    let mut band_lo = 2.0 * n_min;
    let mut worst_low = f64::INFINITY;
    let mut worst_high = 0.0f64;
    while band_lo * 2.0 <= n_max / 2.0 {
        let band_hi = band_lo * 2.0;
        let mut measured = 0.0;
        let mut expected = 0.0;
        for j in 1..n_samples / 2 {
            let f = j as f64 * fs / n_samples as f64;
            let n = f / velocity;
            if n >= band_lo && n < band_hi {
                measured += avg_psd[j] * velocity;
                expected += base.displacement_psd_at(n);
            }
        }
        let ratio = measured / expected;
        worst_low = worst_low.min(ratio);
        worst_high = worst_high.max(ratio);
        band_lo = band_hi;
    }
    (worst_low, worst_high)
}
