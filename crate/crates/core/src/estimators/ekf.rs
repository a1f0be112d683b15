//! Extended Kalman filter baseline.
//!
//! Mean prediction uses the discretized model matrix; covariance prediction
//! uses the discretized process Jacobian. The covariance update is the
//! plain `(I − W·C)·P` form, deliberately without the Joseph stabilization.

use nalgebra::{DMatrix, DVector};

use crate::discretize::{taylor_expm, taylor_transition_integral, DEFAULT_SERIES_ORDER};
use crate::error::{Error, Result};
use crate::model::StateSpaceModel;
use crate::scalar::Real;

use super::sckf::build_qk;
use super::{all_finite, NoiseConfig};

/// One prediction/correction cycle of the EKF.
pub fn ekf_step<T: Real, M: StateSpaceModel<T>>(
    mean: &DVector<T>,
    cov: &DMatrix<T>,
    z: &DVector<T>,
    input: T,
    model: &M,
    noise: &NoiseConfig<T>,
    dt: T,
) -> Result<(DVector<T>, DMatrix<T>)> {
    let n = model.state_dim();
    let p = model.measurement_dim();
    if z.len() != p {
        return Err(Error::Dimension {
            expected: p,
            actual: z.len(),
            context: "measurement vector",
        });
    }

    // prediction
    let cont = model.continuous(mean);
    let ak = taylor_expm(&cont.a, dt, DEFAULT_SERIES_ORDER);
    let integral = taylor_transition_integral(&cont.a, dt, DEFAULT_SERIES_ORDER);
    let bk = &integral * &cont.b;
    let predicted_mean = &ak * mean + bk * input;

    let jac = model.process_jacobian(mean);
    let axk = taylor_expm(&jac, dt, DEFAULT_SERIES_ORDER);
    let qk = build_qk(model, mean, noise, dt);
    let predicted_cov = &axk * cov * axk.transpose() + qk;

    if !all_finite(&predicted_mean) {
        return Err(Error::Diverged("non-finite EKF prediction".into()));
    }

    // correction, with the measurement Jacobian taken at the predicted state
    let cx = model.measurement_jacobian(&predicted_mean);
    let c_model = model.continuous(&predicted_mean).c;
    let innovation = z - c_model * &predicted_mean;

    let s_inn = &cx * &predicted_cov * cx.transpose() + noise.r_matrix();
    let s_inv = s_inn
        .try_inverse()
        .ok_or_else(|| Error::Diverged("singular EKF innovation covariance".into()))?;
    let gain = &predicted_cov * cx.transpose() * s_inv;

    let updated_mean = &predicted_mean + &gain * innovation;
    let updated_cov = (DMatrix::identity(n, n) - &gain * &cx) * &predicted_cov;

    if !all_finite(&updated_mean) || !updated_cov.iter().all(|x| x.is_finite()) {
        return Err(Error::Diverged("non-finite EKF update".into()));
    }
    Ok((updated_mean, updated_cov))
}
