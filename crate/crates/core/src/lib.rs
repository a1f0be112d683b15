//! Terrain stiffness estimation from ride vibrations.
//!
//! A quarter-car model rolling over deformable ground couples the soil
//! stiffness into the suspension dynamics through the series combination
//! with the tire. This crate simulates that system over synthetic rough
//! roads and recovers the combined stiffness (and from it the soil
//! stiffness) online from noisy sprung/unsprung accelerations, using a
//! square-root cubature Kalman filter with an extended Kalman filter
//! baseline.
//!
//! The numerical core is generic over the scalar type ([`Real`], `f32` or
//! `f64`); the aliases at the crate root fix `f64` for everyday use.
//!
//! Quick tour:
//!
//! * [`vehicle`]: quarter-car parameters, terrain catalog, model matrices
//! * [`road`]: roughness-class road synthesis and multi-terrain paths
//! * [`discretize`]: truncated-series discretization
//! * [`estimators`]: SCKF and EKF cycles
//! * [`observability`]: Lie-derivative rank check
//! * [`sim`]: scenarios, truth simulation, metrics, Monte Carlo
//! * [`io`]: CSV/JSON interchange

pub mod discretize;
pub mod error;
pub mod estimators;
pub mod io;
pub mod model;
pub mod observability;
pub mod road;
pub mod scalar;
pub mod sim;
pub mod vehicle;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` aliases for the common case.
pub type VehicleParams64 = vehicle::VehicleParams<f64>;
pub type StateVector64 = vehicle::StateVector<f64>;
pub type TerrainEntry64 = vehicle::TerrainEntry<f64>;
pub type ProfileSpec64 = road::ProfileSpec<f64>;
pub type RoadProfile64 = road::RoadProfile<f64>;
pub type TerrainPath64 = road::TerrainPath<f64>;
pub type NoiseConfig64 = estimators::NoiseConfig<f64>;
pub type FilterEstimate64 = estimators::FilterEstimate<f64>;
pub type Scenario64 = sim::Scenario<f64>;
pub type EstimationResult64 = sim::EstimationResult<f64>;
