//! Random road profile synthesis and multi-terrain path composition.
//!
//! Elevation profiles follow the one-sided displacement PSD
//! `G_d(n) = G_d(n0)·(n/n0)^(−w)` over a spatial-frequency band, realized as
//! a sum of cosines with seeded random phases:
//!
//! ```text
//! h(t) = Σ_j sqrt(2·G_d(n_j)·Δn_j)·cos(2π·n_j·v·t + φ_j)
//! ```
//!
//! The elevation rate is returned as the analytic derivative of that sum,
//! not a finite difference, so the estimator input is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::vehicle::TerrainEntry;

/// Reference spatial frequency of the roughness PSD, cycles/m.
pub const REFERENCE_SPATIAL_FREQUENCY: f64 = 0.1;

/// Road roughness grade. Classes map to the geometric-mean displacement PSD
/// at `n0 = 0.1 cycles/m`, from 16e-6 m³ (A, very good) up to 65536e-6 m³
/// (G, very poor).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IsoClass {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl IsoClass {
    pub fn displacement_psd(self) -> f64 {
        let exponent = match self {
            IsoClass::A => 0,
            IsoClass::B => 1,
            IsoClass::C => 2,
            IsoClass::D => 3,
            IsoClass::E => 4,
            IsoClass::F => 5,
            IsoClass::G => 6,
        };
        16e-6 * f64::powi(4.0, exponent)
    }

    pub const ALL: [IsoClass; 7] = [
        IsoClass::A,
        IsoClass::B,
        IsoClass::C,
        IsoClass::D,
        IsoClass::E,
        IsoClass::F,
        IsoClass::G,
    ];
}

impl std::str::FromStr for IsoClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(IsoClass::A),
            "B" => Ok(IsoClass::B),
            "C" => Ok(IsoClass::C),
            "D" => Ok(IsoClass::D),
            "E" => Ok(IsoClass::E),
            "F" => Ok(IsoClass::F),
            "G" => Ok(IsoClass::G),
            other => Err(Error::Parse(format!("unknown ISO class {other:?}"))),
        }
    }
}

/// Full description of a roughness realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec<T> {
    /// Named grade this spec was derived from, if any.
    pub iso_class: Option<IsoClass>,
    /// Displacement PSD at the reference spatial frequency, m³.
    pub psd_reference: T,
    /// Spectral slope `w`; 2 reproduces the standard grade lines.
    pub waviness_exponent: T,
    /// `[n_min, n_max]` in cycles/m.
    pub spatial_band: [T; 2],
    /// Number of log-spaced cosine components across the band.
    pub components: usize,
    pub seed: u64,
}

impl<T: Real> ProfileSpec<T> {
    pub fn iso(class: IsoClass, seed: u64) -> Self {
        ProfileSpec {
            iso_class: Some(class),
            psd_reference: lit(class.displacement_psd()),
            waviness_exponent: lit(2.0),
            spatial_band: [lit(0.01), lit(10.0)],
            components: 2048,
            seed,
        }
    }

    pub fn custom(psd_reference: T, waviness_exponent: T, spatial_band: [T; 2], seed: u64) -> Self {
        ProfileSpec {
            iso_class: None,
            psd_reference,
            waviness_exponent,
            spatial_band,
            components: 2048,
            seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.psd_reference < T::zero() {
            return Err(Error::domain("psd_reference must be nonnegative"));
        }
        if !(self.spatial_band[0] > T::zero() && self.spatial_band[0] < self.spatial_band[1]) {
            return Err(Error::domain("spatial band must satisfy 0 < n_min < n_max"));
        }
        if self.components == 0 {
            return Err(Error::domain("at least one spectral component required"));
        }
        Ok(())
    }

    /// One-sided displacement PSD at spatial frequency `n`.
    pub fn displacement_psd_at(&self, n: T) -> T {
        let n0 = lit::<T>(REFERENCE_SPATIAL_FREQUENCY);
        self.psd_reference * (n / n0).powf(-self.waviness_exponent)
    }
}

/// Sampled elevation and elevation-rate signals.
#[derive(Clone, Debug)]
pub struct RoadProfile<T: Real> {
    pub dt: T,
    pub samples_h: Vec<T>,
    pub samples_hdot: Vec<T>,
    /// Travel speed the temporal sampling was generated for, m/s.
    pub velocity: T,
    pub spec: ProfileSpec<T>,
}

impl<T: Real> RoadProfile<T> {
    pub fn len(&self) -> usize {
        self.samples_h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples_h.is_empty()
    }

    pub fn time_at(&self, index: usize) -> T {
        self.dt * T::from_usize(index).unwrap()
    }

    pub fn rms_elevation(&self) -> T {
        let n = T::from_usize(self.len()).unwrap();
        let sum = self
            .samples_h
            .iter()
            .fold(T::zero(), |acc, &h| acc + h * h);
        (sum / n).sqrt()
    }
}

/// An ordered sequence of uniform terrain stretches sharing one roughness
/// realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerrainPath<T> {
    pub segments: Vec<PathSegment<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSegment<T> {
    pub terrain: TerrainEntry<T>,
    pub duration: T,
}

impl<T: Real> TerrainPath<T> {
    pub fn new(segments: Vec<PathSegment<T>>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::domain("terrain path needs at least one segment"));
        }
        for seg in &segments {
            if seg.duration <= T::zero() {
                return Err(Error::domain("segment durations must be positive"));
            }
            if seg.terrain.equivalent_stiffness <= T::zero() {
                return Err(Error::domain("segment stiffness must be positive"));
            }
        }
        Ok(TerrainPath { segments })
    }

    pub fn single(terrain: TerrainEntry<T>, duration: T) -> Result<Self> {
        TerrainPath::new(vec![PathSegment { terrain, duration }])
    }

    pub fn total_duration(&self) -> T {
        self.segments
            .iter()
            .fold(T::zero(), |acc, s| acc + s.duration)
    }
}

fn sample_count<T: Real>(duration: T, dt: T) -> usize {
    let steps = (duration / dt).to_f64().unwrap().round() as usize;
    steps + 1
}

/// Synthesize a profile of the given duration.
pub fn generate_profile<T: Real>(
    spec: &ProfileSpec<T>,
    velocity: T,
    duration: T,
    dt: T,
) -> Result<RoadProfile<T>> {
    spec.validate()?;
    if dt <= T::zero() || duration < dt {
        return Err(Error::domain("need duration >= dt > 0"));
    }
    if velocity < T::zero() {
        return Err(Error::domain("velocity must be nonnegative"));
    }

    let n_samples = sample_count(duration, dt);
    let mut h = vec![T::zero(); n_samples];
    let mut hdot = vec![T::zero(); n_samples];

    if spec.psd_reference > T::zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let two_pi = lit::<T>(std::f64::consts::TAU);

        // log-spaced bins; each component sits at its bin's geometric center
        // and carries the bin's integrated power
        let n_min = spec.spatial_band[0].to_f64().unwrap();
        let n_max = spec.spatial_band[1].to_f64().unwrap();
        let ratio = (n_max / n_min).powf(1.0 / spec.components as f64);

        for j in 0..spec.components {
            let lower = n_min * ratio.powi(j as i32);
            let upper = lower * ratio;
            let center = lit::<T>((lower * upper).sqrt());
            let width = lit::<T>(upper - lower);
            let amplitude =
                (lit::<T>(2.0) * spec.displacement_psd_at(center) * width).sqrt();
            let omega = two_pi * center * velocity;
            let phase = lit::<T>(rng.gen_range(0.0..std::f64::consts::TAU));

            // rotate (cos, sin) of the running argument instead of calling
            // sincos per sample
            let (step_sin, step_cos) = (omega * dt).sin_cos();
            let (mut s, mut c) = phase.sin_cos();
            let rate = amplitude * omega;
            for k in 0..n_samples {
                h[k] += amplitude * c;
                hdot[k] -= rate * s;
                let c_next = c * step_cos - s * step_sin;
                s = s * step_cos + c * step_sin;
                c = c_next;
            }
        }
    }

    Ok(RoadProfile {
        dt,
        samples_h: h,
        samples_hdot: hdot,
        velocity,
        spec: spec.clone(),
    })
}

/// Generate one continuous profile spanning a multi-terrain path and the
/// aligned per-sample soil-stiffness truth.
pub fn compose_path<T: Real>(
    path: &TerrainPath<T>,
    spec: &ProfileSpec<T>,
    velocity: T,
    dt: T,
) -> Result<(RoadProfile<T>, Vec<T>)> {
    let duration = path.total_duration();
    let profile = generate_profile(spec, velocity, duration, dt)?;
    let ks = sample_stiffness_timeline(path, dt, profile.len());
    Ok((profile, ks))
}

/// Per-sample soil stiffness along a path; the final segment extends over
/// any trailing samples.
pub fn sample_stiffness_timeline<T: Real>(
    path: &TerrainPath<T>,
    dt: T,
    n_samples: usize,
) -> Vec<T> {
    let mut ks = Vec::with_capacity(n_samples);
    let mut boundary = T::zero();
    let mut seg_iter = path.segments.iter();
    let mut current = seg_iter.next().expect("path validated non-empty");
    boundary += current.duration;
    let half = lit::<T>(0.5);
    for k in 0..n_samples {
        let t = dt * T::from_usize(k).unwrap();
        // switch exactly on the boundary sample
        while t + dt * half * lit::<T>(1e-6) >= boundary {
            match seg_iter.next() {
                Some(next) => {
                    current = next;
                    boundary += current.duration;
                }
                None => break,
            }
        }
        ks.push(current.terrain.equivalent_stiffness);
    }
    ks
}
