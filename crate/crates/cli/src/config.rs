//! JSON run configuration.
//!
//! One document describes a complete scenario. All physical quantities are
//! SI and the unit is part of the key name; stiffnesses are accepted in N/m
//! only. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use terrakf::estimators::{NoiseConfig, QkModel};
use terrakf::road::{IsoClass, PathSegment, ProfileSpec, TerrainPath};
use terrakf::sim::{FilterKind, InitialGuessPolicy, Scenario};
use terrakf::vehicle::{find_terrain, ModelOrder, TerrainEntry, VehicleParams};

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub vehicle: VehicleConfig,
    pub path: Vec<SegmentConfig>,
    pub profile: ProfileConfig,
    pub velocity_m_per_s: f64,
    pub dt_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfigDoc>,
    pub seed: u64,
    #[serde(default = "default_filter")]
    pub filter: FilterKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_guess: Option<InitialGuessPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_covariance_diag: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmse_window_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptation_threshold_pct: Option<f64>,
}

fn default_filter() -> FilterKind {
    FilterKind::Sckf
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub model_order: ModelOrder,
    pub sprung_mass_kg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unsprung_mass_kg: Option<f64>,
    pub suspension_stiffness_n_per_m: f64,
    pub suspension_damping_ns_per_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tire_stiffness_n_per_m: Option<f64>,
}

/// One stretch of terrain: either a catalog name or an explicit stiffness.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terrain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soil_stiffness_n_per_m: Option<f64>,
    pub duration_s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iso_class: Option<IsoClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_reference_m3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waviness_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spatial_band_cycles_per_m: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfigDoc {
    pub q_diag: Vec<f64>,
    pub r_diag: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qk_model: Option<QkModel>,
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn build_vehicle(&self) -> Result<VehicleParams<f64>, CliError> {
        let v = &self.vehicle;
        if v.sprung_mass_kg <= 0.0 {
            return Err(CliError::config("vehicle.sprung_mass_kg must be positive"));
        }
        if v.suspension_stiffness_n_per_m <= 0.0 {
            return Err(CliError::config(
                "vehicle.suspension_stiffness_n_per_m must be positive",
            ));
        }
        if v.suspension_damping_ns_per_m <= 0.0 {
            return Err(CliError::config(
                "vehicle.suspension_damping_ns_per_m must be positive",
            ));
        }
        match v.model_order {
            ModelOrder::TwoDof => {
                let unsprung = v.unsprung_mass_kg.ok_or_else(|| {
                    CliError::config("vehicle.unsprung_mass_kg required for two_dof")
                })?;
                let tire = v.tire_stiffness_n_per_m.ok_or_else(|| {
                    CliError::config("vehicle.tire_stiffness_n_per_m required for two_dof")
                })?;
                VehicleParams::two_dof(
                    v.sprung_mass_kg,
                    unsprung,
                    v.suspension_stiffness_n_per_m,
                    v.suspension_damping_ns_per_m,
                    tire,
                )
                .map_err(|e| CliError::config(format!("vehicle: {e}")))
            }
            ModelOrder::OneDofLrv => {
                if v.unsprung_mass_kg.is_some() || v.tire_stiffness_n_per_m.is_some() {
                    return Err(CliError::config(
                        "vehicle.unsprung_mass_kg / tire_stiffness_n_per_m must be absent for one_dof_lrv",
                    ));
                }
                VehicleParams::one_dof_lrv(
                    v.sprung_mass_kg,
                    v.suspension_stiffness_n_per_m,
                    v.suspension_damping_ns_per_m,
                )
                .map_err(|e| CliError::config(format!("vehicle: {e}")))
            }
        }
    }

    pub fn build_path(&self) -> Result<TerrainPath<f64>, CliError> {
        if self.path.is_empty() {
            return Err(CliError::config("path must contain at least one segment"));
        }
        let mut segments = Vec::with_capacity(self.path.len());
        for (i, seg) in self.path.iter().enumerate() {
            if seg.duration_s <= 0.0 {
                return Err(CliError::config(format!(
                    "path[{i}].duration_s must be positive"
                )));
            }
            let terrain: TerrainEntry<f64> = match (&seg.terrain, seg.soil_stiffness_n_per_m) {
                (Some(name), None) => find_terrain(name).ok_or_else(|| {
                    CliError::config(format!("path[{i}].terrain {name:?} not in the catalog"))
                })?,
                (None, Some(ks)) => TerrainEntry::new(format!("custom[{i}]"), ks)
                    .map_err(|e| CliError::config(format!("path[{i}].soil_stiffness_n_per_m: {e}")))?,
                (Some(name), Some(ks)) => {
                    let known = find_terrain::<f64>(name).ok_or_else(|| {
                        CliError::config(format!("path[{i}].terrain {name:?} not in the catalog"))
                    })?;
                    if (known.equivalent_stiffness - ks).abs() > 1e-9 * ks.abs() {
                        return Err(CliError::config(format!(
                            "path[{i}]: terrain and soil_stiffness_n_per_m disagree"
                        )));
                    }
                    known
                }
                (None, None) => {
                    return Err(CliError::config(format!(
                        "path[{i}] needs either terrain or soil_stiffness_n_per_m"
                    )))
                }
            };
            segments.push(PathSegment {
                terrain,
                duration: seg.duration_s,
            });
        }
        TerrainPath::new(segments).map_err(|e| CliError::config(format!("path: {e}")))
    }

    pub fn build_profile(&self, seed: u64) -> Result<ProfileSpec<f64>, CliError> {
        let p = &self.profile;
        let mut spec = match (p.iso_class, p.psd_reference_m3) {
            (Some(class), None) => ProfileSpec::iso(class, seed),
            (None, Some(psd)) => {
                if psd < 0.0 {
                    return Err(CliError::config(
                        "profile.psd_reference_m3 must be nonnegative",
                    ));
                }
                ProfileSpec::custom(
                    psd,
                    p.waviness_exponent.unwrap_or(2.0),
                    p.spatial_band_cycles_per_m.unwrap_or([0.01, 10.0]),
                    seed,
                )
            }
            (Some(class), Some(psd)) => {
                let mut spec = ProfileSpec::iso(class, seed);
                spec.psd_reference = psd;
                spec
            }
            (None, None) => {
                return Err(CliError::config(
                    "profile needs iso_class or psd_reference_m3",
                ))
            }
        };
        if let Some(w) = p.waviness_exponent {
            spec.waviness_exponent = w;
        }
        if let Some(band) = p.spatial_band_cycles_per_m {
            if !(band[0] > 0.0 && band[0] < band[1]) {
                return Err(CliError::config(
                    "profile.spatial_band_cycles_per_m must satisfy 0 < min < max",
                ));
            }
            spec.spatial_band = band;
        }
        if let Some(c) = p.components {
            if c == 0 {
                return Err(CliError::config("profile.components must be positive"));
            }
            spec.components = c;
        }
        Ok(spec)
    }

    pub fn build_noise(&self, order: ModelOrder) -> Result<NoiseConfig<f64>, CliError> {
        match &self.noise {
            None => Ok(match order {
                ModelOrder::TwoDof => NoiseConfig::default_two_dof(),
                ModelOrder::OneDofLrv => NoiseConfig::default_one_dof(),
            }),
            Some(doc) => {
                let default_model = match order {
                    ModelOrder::TwoDof => QkModel::ParameterRandomWalk,
                    ModelOrder::OneDofLrv => QkModel::ScaledGain,
                };
                NoiseConfig::new(
                    doc.q_diag.clone(),
                    doc.r_diag.clone(),
                    doc.qk_model.unwrap_or(default_model),
                )
                .map_err(|e| CliError::config(format!("noise: {e}")))
            }
        }
    }

    /// Assemble the full scenario; `seed_override` comes from `--seed`,
    /// `filter_override` from `--filter`.
    pub fn build_scenario(
        &self,
        seed_override: Option<u64>,
        filter_override: Option<FilterKind>,
    ) -> Result<Scenario<f64>, CliError> {
        if self.dt_s <= 0.0 {
            return Err(CliError::config("dt_s must be positive"));
        }
        if self.velocity_m_per_s < 0.0 {
            return Err(CliError::config("velocity_m_per_s must be nonnegative"));
        }
        let seed = seed_override.unwrap_or(self.seed);
        let vehicle = self.build_vehicle()?;
        let path = self.build_path()?;
        let profile = self.build_profile(seed)?;
        let noise = self.build_noise(vehicle.model_order)?;
        let mut scenario = Scenario::new(
            vehicle,
            path,
            profile,
            self.velocity_m_per_s,
            self.dt_s,
            noise,
            seed,
            filter_override.unwrap_or(self.filter),
        )
        .map_err(|e| CliError::config(e.to_string()))?;
        if let Some(duration) = self.duration_s {
            if duration < self.dt_s {
                return Err(CliError::config("duration_s must be at least dt_s"));
            }
            scenario = scenario.with_duration(duration);
        }
        if let Some(policy) = self.initial_guess {
            scenario = scenario.with_initial_guess(policy);
        }
        if let Some(diag) = &self.initial_covariance_diag {
            scenario = scenario.with_initial_covariance(diag.clone());
        }
        if let Some(window) = self.rmse_window_s {
            if window <= 0.0 {
                return Err(CliError::config("rmse_window_s must be positive"));
            }
            scenario.rmse_window = Some(window);
        }
        if let Some(thr) = self.adaptation_threshold_pct {
            if thr <= 0.0 {
                return Err(CliError::config(
                    "adaptation_threshold_pct must be positive",
                ));
            }
            scenario.adaptation_threshold_pct = thr;
        }
        scenario
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(scenario)
    }
}
