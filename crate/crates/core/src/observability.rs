//! Nonlinear observability check via Lie derivatives of the measurement map.
//!
//! The observability matrix stacks the gradients of the repeated Lie
//! derivatives `L_f^(i)[h]` for `i = 0..n−1`, where `f(x) = A(x)·x + B·u`
//! and `h(x) = C(x)·x`. Derivatives are taken numerically (central
//! differences, step scaled to the state magnitude); the rank comes from the
//! singular values at a relative tolerance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::StateSpaceModel;
use crate::scalar::{lit, Real};

#[derive(Clone, Debug)]
pub struct ObservabilityReport<T: Real> {
    /// Stacked gradient rows, (n·p)×n.
    pub matrix: DMatrix<T>,
    /// Singular values in descending order.
    pub singular_values: Vec<T>,
    /// Number of singular values above `tol·σ_max`.
    pub rank: usize,
    pub observable: bool,
    /// Set when the stiffness state is nonpositive: the model has left the
    /// physical regime and the verdict should be read with care.
    pub nonphysical_state: bool,
}

fn drift<T: Real, M: StateSpaceModel<T>>(model: &M, x: &DVector<T>, input: T) -> DVector<T> {
    let cont = model.continuous(x);
    &cont.a * x + &cont.b * input
}

fn observation<T: Real, M: StateSpaceModel<T>>(model: &M, x: &DVector<T>) -> DVector<T> {
    let cont = model.continuous(x);
    &cont.c * x
}

/// Central-difference gradient of a vector map, p×n.
///
/// The step is large enough that the roundoff amplified by the nested
/// differentiation stays well below the rank tolerance; the drift is a
/// low-degree polynomial in the state, so truncation stays benign.
fn gradient<T: Real, F>(func: &F, x: &DVector<T>, p: usize) -> DMatrix<T>
where
    F: Fn(&DVector<T>) -> DVector<T>,
{
    let n = x.len();
    let mut grad = DMatrix::zeros(p, n);
    for j in 0..n {
        let step = lit::<T>(1e-4) * T::one().max(x[j].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += step;
        xm[j] -= step;
        let diff = (func(&xp) - func(&xm)) / (step + step);
        grad.set_column(j, &diff);
    }
    grad
}

fn lie_derivative<T: Real, M: StateSpaceModel<T>>(
    model: &M,
    order: usize,
    x: &DVector<T>,
    input: T,
) -> DVector<T> {
    if order == 0 {
        return observation(model, x);
    }
    let p = model.measurement_dim();
    let inner = |y: &DVector<T>| lie_derivative(model, order - 1, y, input);
    let grad = gradient(&inner, x, p);
    grad * drift(model, x, input)
}

/// Build the observability matrix at a state/input pair and test its rank.
pub fn lie_observability<T: Real, M: StateSpaceModel<T>>(
    model: &M,
    state: &DVector<T>,
    input: T,
    tol: T,
) -> Result<ObservabilityReport<T>> {
    if tol < T::zero() || tol >= T::one() {
        return Err(Error::domain("rank tolerance must satisfy 0 <= tol < 1"));
    }
    let n = model.state_dim();
    let p = model.measurement_dim();
    if state.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: state.len(),
            context: "observability state",
        });
    }

    let mut matrix = DMatrix::zeros(n * p, n);
    for order in 0..n {
        let func = |y: &DVector<T>| lie_derivative(model, order, y, input);
        let block = gradient(&func, state, p);
        matrix.view_mut((order * p, 0), (p, n)).copy_from(&block);
    }

    // row scales differ by powers of the dynamics rates; normalize rows so
    // the rank decision is not dominated by the highest derivative
    let mut scaled = matrix.clone();
    for i in 0..scaled.nrows() {
        let norm = scaled.row(i).norm();
        if norm > T::zero() {
            for j in 0..n {
                scaled[(i, j)] /= norm;
            }
        }
    }

    let svd = scaled.svd(false, false);
    let mut singular_values: Vec<T> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let sigma_max = singular_values.first().copied().unwrap_or(T::zero());
    let rank = singular_values
        .iter()
        .filter(|&&s| s > tol * sigma_max)
        .count();

    Ok(ObservabilityReport {
        matrix,
        singular_values,
        rank,
        observable: rank == n,
        nonphysical_state: state[n - 1] <= T::zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LinearStateSpace;
    use crate::vehicle::{StateVector, VehicleParams};

    #[test]
    fn reference_vehicle_is_observable() {
        let params: VehicleParams<f64> = VehicleParams::offroad_reference();
        let k_tot = 137.93e3; // Graneville loam through the tire series
        let state = StateVector::two_dof(0.013, -0.2, 0.006, 0.31, k_tot).into_vector();
        let report = lie_observability(&params, &state, 0.05, 1e-8).unwrap();
        assert_eq!(report.rank, 5);
        assert!(report.observable);
        assert!(!report.nonphysical_state);
        assert_eq!(report.singular_values.len(), 5);
        assert_eq!(report.matrix.nrows(), 10);
    }

    #[test]
    fn identity_observation_is_always_full_rank() {
        let model = LinearStateSpace {
            a: DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -2.0, -0.3, 0.0, 0.0, 0.0, 0.0]),
            b: DVector::zeros(3),
            g: DMatrix::identity(3, 3),
            c: DMatrix::identity(3, 3),
        };
        let report =
            lie_observability(&model, &DVector::from_vec(vec![1.0, 2.0, 3.0]), 0.0, 1e-8).unwrap();
        assert_eq!(report.rank, 3);
        assert!(report.observable);
    }

    #[test]
    fn degenerate_state_still_produces_a_report() {
        let params: VehicleParams<f64> = VehicleParams::offroad_reference();
        // x3 = 0 and k_tot = 0 simultaneously: rank is whatever the numbers
        // say, but the nonphysical flag must be raised
        let state = StateVector::two_dof(0.01, 0.1, 0.0, -0.1, 0.0).into_vector();
        let report = lie_observability(&params, &state, 0.0, 1e-8).unwrap();
        assert!(report.nonphysical_state);
        assert!(report.rank <= 5);
    }

    #[test]
    fn zero_measurement_rows_are_unobservable() {
        let model = LinearStateSpace {
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.1]),
            b: DVector::zeros(2),
            g: DMatrix::identity(2, 2),
            c: DMatrix::zeros(1, 2),
        };
        let report = lie_observability(&model, &DVector::from_vec(vec![0.1, 0.2]), 0.0, 1e-8)
            .unwrap();
        assert_eq!(report.rank, 0);
        assert!(!report.observable);
    }

    #[test]
    fn tolerance_domain_is_enforced() {
        let params: VehicleParams<f64> = VehicleParams::offroad_reference();
        let state = StateVector::two_dof(0.0, 0.0, 0.0, 0.0, 1e5).into_vector();
        assert!(lie_observability(&params, &state, 0.0, 1.0).is_err());
        assert!(lie_observability(&params, &state, 0.0, -0.1).is_err());
    }
}
