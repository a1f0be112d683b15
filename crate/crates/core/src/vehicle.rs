//! Quarter-car vehicle/terrain model.
//!
//! Two variants are supported:
//!
//! * `TwoDof`: sprung and unsprung mass, suspension spring/damper, tire
//!   stiffness in series with an equivalent soil stiffness. Five states:
//!   suspension deflection, sprung velocity, tire deflection, unsprung
//!   velocity, and the combined stiffness `k_tot` appended for joint
//!   estimation.
//! * `OneDofLrv`: single condensed mass on a joined stiffness, the layout
//!   of the Apollo Lunar Roving Vehicle. Three states.
//!
//! The combined stiffness has zero dynamics: it is a parameter modeled as a
//! random walk, so its row in `A` is identically zero and adaptation comes
//! from process noise alone.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ContinuousMatrices, StateSpaceModel};
use crate::scalar::{lit, Real};

/// Which quarter-car variant a parameter set describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelOrder {
    TwoDof,
    OneDofLrv,
}

impl ModelOrder {
    pub fn state_dim(self) -> usize {
        match self {
            ModelOrder::TwoDof => 5,
            ModelOrder::OneDofLrv => 3,
        }
    }

    pub fn measurement_dim(self) -> usize {
        match self {
            ModelOrder::TwoDof => 2,
            ModelOrder::OneDofLrv => 1,
        }
    }
}

/// Masses, suspension and tire properties of the quarter car.
///
/// All quantities are SI (kg, N/m, N·s/m). For `OneDofLrv` the unsprung
/// mass and the tire stiffness are unused: suspension and tire act as one
/// joined stiffness and `suspension_stiffness` holds it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VehicleParams<T: Real> {
    pub sprung_mass: T,
    pub unsprung_mass: T,
    pub suspension_stiffness: T,
    pub suspension_damping: T,
    pub tire_stiffness: T,
    pub model_order: ModelOrder,
}

impl<T: Real> VehicleParams<T> {
    /// Two-degree-of-freedom quarter car.
    pub fn two_dof(
        sprung_mass: T,
        unsprung_mass: T,
        suspension_stiffness: T,
        suspension_damping: T,
        tire_stiffness: T,
    ) -> Result<Self> {
        let params = VehicleParams {
            sprung_mass,
            unsprung_mass,
            suspension_stiffness,
            suspension_damping,
            tire_stiffness,
            model_order: ModelOrder::TwoDof,
        };
        params.validate()?;
        Ok(params)
    }

    /// Single-mass variant; `joined_stiffness` plays the series role the
    /// tire has in the 2-DOF model.
    pub fn one_dof_lrv(mass: T, joined_stiffness: T, damping: T) -> Result<Self> {
        let params = VehicleParams {
            sprung_mass: mass,
            unsprung_mass: T::zero(),
            suspension_stiffness: joined_stiffness,
            suspension_damping: damping,
            tire_stiffness: joined_stiffness,
            model_order: ModelOrder::OneDofLrv,
        };
        params.validate()?;
        Ok(params)
    }

    /// Reference off-road heavy vehicle (m_s 455 kg, m_ns 45.5 kg,
    /// k 25 kN/m, c 2 kN·s/m, k_t 175 kN/m).
    pub fn offroad_reference() -> Self {
        VehicleParams {
            sprung_mass: lit(455.0),
            unsprung_mass: lit(45.5),
            suspension_stiffness: lit(25_000.0),
            suspension_damping: lit(2_000.0),
            tire_stiffness: lit(175_000.0),
            model_order: ModelOrder::TwoDof,
        }
    }

    /// Lunar Roving Vehicle (m 75 kg, joined stiffness 15 kN/m, c 1.5 kN·s/m).
    pub fn lunar_roving_vehicle() -> Self {
        VehicleParams {
            sprung_mass: lit(75.0),
            unsprung_mass: T::zero(),
            suspension_stiffness: lit(15_000.0),
            suspension_damping: lit(1_500.0),
            tire_stiffness: lit(15_000.0),
            model_order: ModelOrder::OneDofLrv,
        }
    }

    fn validate(&self) -> Result<()> {
        let mut checks: Vec<(&str, T)> = vec![
            ("sprung_mass", self.sprung_mass),
            ("suspension_stiffness", self.suspension_stiffness),
            ("suspension_damping", self.suspension_damping),
        ];
        if self.model_order == ModelOrder::TwoDof {
            checks.push(("unsprung_mass", self.unsprung_mass));
            checks.push(("tire_stiffness", self.tire_stiffness));
        }
        for (name, value) in checks {
            if value <= T::zero() {
                return Err(Error::domain(format!("{name} must be strictly positive")));
            }
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.model_order.state_dim()
    }

    pub fn measurement_dim(&self) -> usize {
        self.model_order.measurement_dim()
    }

    /// The stiffness that acts in series with the soil: the tire for the
    /// 2-DOF model, the joined stiffness for the LRV.
    pub fn series_stiffness(&self) -> T {
        match self.model_order {
            ModelOrder::TwoDof => self.tire_stiffness,
            ModelOrder::OneDofLrv => self.suspension_stiffness,
        }
    }
}

/// One catalog entry: a named terrain with its equivalent stiffness in N/m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerrainEntry<T> {
    pub name: String,
    pub equivalent_stiffness: T,
}

impl<T: Real> TerrainEntry<T> {
    pub fn new(name: impl Into<String>, equivalent_stiffness: T) -> Result<Self> {
        if equivalent_stiffness <= T::zero() {
            return Err(Error::domain("equivalent_stiffness must be positive"));
        }
        Ok(TerrainEntry {
            name: name.into(),
            equivalent_stiffness,
        })
    }
}

#[derive(Deserialize)]
struct CatalogFile {
    terrains: Vec<TerrainEntry<f64>>,
}

/// Built-in terrain catalog (stiffness in N/m).
pub fn terrain_catalog<T: Real>() -> Vec<TerrainEntry<T>> {
    let raw = include_str!("../data/terrains.json");
    parse_terrain_catalog(raw).expect("embedded terrain catalog is valid")
}

/// Parse a catalog document of the same schema as the embedded one.
pub fn parse_terrain_catalog<T: Real>(json: &str) -> Result<Vec<TerrainEntry<T>>> {
    let file: CatalogFile =
        serde_json::from_str(json).map_err(|e| Error::Parse(format!("terrain catalog: {e}")))?;
    file.terrains
        .into_iter()
        .map(|t| TerrainEntry::new(t.name, lit::<T>(t.equivalent_stiffness)))
        .collect()
}

/// Look a terrain up by (case-insensitive) name.
pub fn find_terrain<T: Real>(name: &str) -> Option<TerrainEntry<T>> {
    terrain_catalog::<T>()
        .into_iter()
        .find(|t| t.name.eq_ignore_ascii_case(name))
}

/// State vector of the ride model, with the combined stiffness appended as
/// the last entry.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    order: ModelOrder,
    data: DVector<T>,
}

impl<T: Real> StateVector<T> {
    pub fn new(order: ModelOrder, data: DVector<T>) -> Result<Self> {
        if data.len() != order.state_dim() {
            return Err(Error::Dimension {
                expected: order.state_dim(),
                actual: data.len(),
                context: "state vector",
            });
        }
        Ok(StateVector { order, data })
    }

    /// `[y1−y2, ẏ1, y2−h, ẏ2, k_tot]`.
    pub fn two_dof(
        suspension_deflection: T,
        sprung_velocity: T,
        tire_deflection: T,
        unsprung_velocity: T,
        combined_stiffness: T,
    ) -> Self {
        StateVector {
            order: ModelOrder::TwoDof,
            data: DVector::from_vec(vec![
                suspension_deflection,
                sprung_velocity,
                tire_deflection,
                unsprung_velocity,
                combined_stiffness,
            ]),
        }
    }

    /// `[y1−h, ẏ1, k_tot]`.
    pub fn one_dof_lrv(deflection: T, velocity: T, combined_stiffness: T) -> Self {
        StateVector {
            order: ModelOrder::OneDofLrv,
            data: DVector::from_vec(vec![deflection, velocity, combined_stiffness]),
        }
    }

    pub fn zero_motion(order: ModelOrder, combined_stiffness: T) -> Self {
        let mut data = DVector::zeros(order.state_dim());
        data[order.state_dim() - 1] = combined_stiffness;
        StateVector { order, data }
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn k_tot(&self) -> T {
        self.data[self.data.len() - 1]
    }

    pub fn as_vector(&self) -> &DVector<T> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<T> {
        self.data
    }
}

/// Series combination of the soil stiffness and the element it loads:
/// `k_s·k_t / (k_s + k_t)`.
pub fn combined_stiffness<T: Real>(soil: T, tire: T) -> Result<T> {
    if soil <= T::zero() || tire <= T::zero() {
        return Err(Error::domain(
            "combined_stiffness requires strictly positive stiffnesses",
        ));
    }
    Ok(soil * tire / (soil + tire))
}

/// Invert the series combination to recover the soil stiffness from an
/// estimated `k_tot`. The series value is necessarily below either element,
/// so `k_tot ≥ k_t` has no preimage.
pub fn soil_stiffness_from_combined<T: Real>(k_tot: T, tire: T) -> Result<T> {
    if k_tot <= T::zero() || tire <= T::zero() {
        return Err(Error::domain(
            "soil_stiffness_from_combined requires strictly positive stiffnesses",
        ));
    }
    if k_tot >= tire {
        return Err(Error::domain(
            "series stiffness cannot reach or exceed the tire stiffness",
        ));
    }
    Ok(tire * k_tot / (tire - k_tot))
}

fn check_state<T: Real>(params: &VehicleParams<T>, state: &StateVector<T>) -> Result<()> {
    if state.order() != params.model_order {
        return Err(Error::Dimension {
            expected: params.state_dim(),
            actual: state.as_vector().len(),
            context: "state vector does not match model order",
        });
    }
    Ok(())
}

/// Continuous-time matrices of the ride model at the given state.
pub fn build_matrices<T: Real>(
    params: &VehicleParams<T>,
    state: &StateVector<T>,
) -> Result<ContinuousMatrices<T>> {
    check_state(params, state)?;
    Ok(params.continuous(state.as_vector()))
}

/// Jacobian of `x ↦ A(x)·x`; differs from `A(x)` only in the column of the
/// estimated stiffness.
pub fn process_jacobian<T: Real>(
    params: &VehicleParams<T>,
    state: &StateVector<T>,
) -> Result<DMatrix<T>> {
    check_state(params, state)?;
    Ok(StateSpaceModel::process_jacobian(params, state.as_vector()))
}

/// Noise-free accelerations `C(x)·x` the onboard accelerometers would read
/// (input feed-through excluded; see [`StateSpaceModel::feedthrough`]).
pub fn measurement<T: Real>(
    params: &VehicleParams<T>,
    state: &StateVector<T>,
) -> Result<DVector<T>> {
    check_state(params, state)?;
    let matrices = params.continuous(state.as_vector());
    Ok(&matrices.c * state.as_vector())
}

impl<T: Real> StateSpaceModel<T> for VehicleParams<T> {
    fn state_dim(&self) -> usize {
        self.model_order.state_dim()
    }

    fn measurement_dim(&self) -> usize {
        self.model_order.measurement_dim()
    }

    fn continuous(&self, x: &DVector<T>) -> ContinuousMatrices<T> {
        match self.model_order {
            ModelOrder::TwoDof => {
                let ms = self.sprung_mass;
                let mns = self.unsprung_mass;
                let k = self.suspension_stiffness;
                let c = self.suspension_damping;
                let k_tot = x[4];

                let mut a = DMatrix::zeros(5, 5);
                a[(0, 1)] = T::one();
                a[(0, 3)] = -T::one();
                a[(1, 0)] = -k / ms;
                a[(1, 1)] = -c / ms;
                a[(1, 3)] = c / ms;
                a[(2, 3)] = T::one();
                a[(3, 0)] = k / mns;
                a[(3, 1)] = c / mns;
                a[(3, 2)] = -k_tot / mns;
                a[(3, 3)] = -c / mns;

                let b = DVector::from_vec(vec![
                    T::zero(),
                    T::zero(),
                    -T::one(),
                    T::zero(),
                    T::zero(),
                ]);

                let ones = [
                    (0, 1),
                    (0, 3),
                    (1, 0),
                    (1, 1),
                    (1, 3),
                    (2, 3),
                    (3, 0),
                    (3, 1),
                    (3, 2),
                    (3, 3),
                    (4, 4),
                ];
                let mut g = DMatrix::zeros(5, 5);
                for (i, j) in ones {
                    g[(i, j)] = T::one();
                }

                let c_mat = DMatrix::from_fn(2, 5, |i, j| a[([1, 3][i], j)]);
                ContinuousMatrices { a, b, g, c: c_mat }
            }
            ModelOrder::OneDofLrv => {
                let ms = self.sprung_mass;
                let c = self.suspension_damping;
                let k_tot = x[2];

                let mut a = DMatrix::zeros(3, 3);
                a[(0, 1)] = T::one();
                a[(1, 0)] = -k_tot / ms;
                a[(1, 1)] = -c / ms;

                let b = DVector::from_vec(vec![-T::one(), c / ms, T::zero()]);

                // 2-DOF gain with the third and fourth rows/columns removed.
                let mut g = DMatrix::zeros(3, 3);
                g[(0, 1)] = T::one();
                g[(1, 0)] = T::one();
                g[(1, 1)] = T::one();
                g[(2, 2)] = T::one();

                let c_mat = DMatrix::from_fn(1, 3, |_, j| a[(1, j)]);
                ContinuousMatrices { a, b, g, c: c_mat }
            }
        }
    }

    fn process_jacobian(&self, x: &DVector<T>) -> DMatrix<T> {
        let mut jac = self.continuous(x).a;
        match self.model_order {
            ModelOrder::TwoDof => {
                jac[(3, 4)] = -x[2] / self.unsprung_mass;
            }
            ModelOrder::OneDofLrv => {
                jac[(1, 2)] = -x[0] / self.sprung_mass;
            }
        }
        jac
    }

    /// The measured accelerations are the velocity-derivative rows of the
    /// drift, so their gradient is the matching rows of the process
    /// Jacobian.
    fn measurement_jacobian(&self, x: &DVector<T>) -> DMatrix<T> {
        let jac = StateSpaceModel::process_jacobian(self, x);
        let n = self.state_dim();
        let rows: &[usize] = match self.model_order {
            ModelOrder::TwoDof => &[1, 3],
            ModelOrder::OneDofLrv => &[1],
        };
        DMatrix::from_fn(rows.len(), n, |i, j| jac[(rows[i], j)])
    }

    fn feedthrough(&self) -> DVector<T> {
        match self.model_order {
            ModelOrder::TwoDof => DVector::zeros(2),
            ModelOrder::OneDofLrv => {
                DVector::from_vec(vec![self.suspension_damping / self.sprung_mass])
            }
        }
    }
}
