//! Square-root cubature Kalman filter cycle.

use nalgebra::{DMatrix, DVector};

use crate::discretize::{taylor_expm, taylor_transition_integral, DEFAULT_SERIES_ORDER};
use crate::error::{Error, Result};
use crate::model::StateSpaceModel;
use crate::scalar::Real;

use super::{
    all_finite, cubature_points, sqrt_psd, triangularize, FilterEstimate, NoiseConfig, QkModel,
};

/// Per-step process covariance at the current estimate.
pub(crate) fn build_qk<T: Real, M: StateSpaceModel<T>>(
    model: &M,
    mean: &DVector<T>,
    noise: &NoiseConfig<T>,
    dt: T,
) -> DMatrix<T> {
    let cont = model.continuous(mean);
    let integral = taylor_transition_integral(&cont.a, dt, DEFAULT_SERIES_ORDER);
    let gk = integral * &cont.g;
    let q = noise.q_matrix();
    let mut qk = (&gk * q * gk.transpose()) * dt;
    if noise.qk_model == QkModel::ParameterRandomWalk {
        let last = model.state_dim() - 1;
        qk[(last, last)] = dt * noise.q_diag[last];
    }
    qk
}

/// Propagate the estimate one step through the plant.
///
/// Each cubature point is pushed through its own discretization of the
/// state-dependent model, `X*_i = Ak(X_i)·X_i + Bk(X_i)·u`, the predicted
/// mean is the equal-weight average, and the square-root factor comes from
/// the QR compression of the centered points alongside `√Qk`.
pub fn sckf_predict<T: Real, M: StateSpaceModel<T>>(
    est: &FilterEstimate<T>,
    model: &M,
    input: T,
    noise: &NoiseConfig<T>,
    dt: T,
) -> Result<FilterEstimate<T>> {
    let n = model.state_dim();
    debug_assert_eq!(est.dim(), n);
    let two_n = T::from_usize(2 * n).unwrap();

    let set = cubature_points(est);
    let mut propagated = Vec::with_capacity(2 * n);
    for point in &set.points {
        let cont = model.continuous(point);
        let ak = taylor_expm(&cont.a, dt, DEFAULT_SERIES_ORDER);
        let integral = taylor_transition_integral(&cont.a, dt, DEFAULT_SERIES_ORDER);
        let bk = integral * &cont.b;
        propagated.push(ak * point + bk * input);
    }

    let mut mean = DVector::zeros(n);
    for p in &propagated {
        mean += p;
    }
    mean /= two_n;
    if !all_finite(&mean) {
        return Err(Error::Diverged(
            "non-finite state after cubature propagation".into(),
        ));
    }

    let weight = T::one() / two_n.sqrt();
    let mut centered = DMatrix::zeros(n, 2 * n);
    for (i, p) in propagated.iter().enumerate() {
        let d = (p - &mean) * weight;
        centered.set_column(i, &d);
    }

    let qk = build_qk(model, &est.mean, noise, dt);
    let sqrt_qk = sqrt_psd(&qk);
    let mut compound = DMatrix::zeros(n, 2 * n + sqrt_qk.ncols());
    compound.view_mut((0, 0), (n, 2 * n)).copy_from(&centered);
    compound
        .view_mut((0, 2 * n), (n, sqrt_qk.ncols()))
        .copy_from(&sqrt_qk);

    FilterEstimate::new(mean, triangularize(&compound))
}

/// Fold a measurement into the predicted estimate.
///
/// The predicted measurement points are `Z_i = C(X_i)·X_i`; the innovation
/// factor comes from QR over `[Z_centered  √R]`, the gain from two
/// triangular solves against it, and the updated factor from the QR of
/// `[χ − W·Z_centered   W·√R]`.
pub fn sckf_correct<T: Real, M: StateSpaceModel<T>>(
    pred: &FilterEstimate<T>,
    z: &DVector<T>,
    model: &M,
    noise: &NoiseConfig<T>,
) -> Result<FilterEstimate<T>> {
    let n = model.state_dim();
    let p = model.measurement_dim();
    if z.len() != p {
        return Err(Error::Dimension {
            expected: p,
            actual: z.len(),
            context: "measurement vector",
        });
    }
    let two_n = T::from_usize(2 * n).unwrap();
    let weight = T::one() / two_n.sqrt();

    let set = cubature_points(pred);
    let mut z_points = Vec::with_capacity(2 * n);
    for point in &set.points {
        let c = model.continuous(point).c;
        z_points.push(c * point);
    }

    let mut z_mean = DVector::zeros(p);
    for zp in &z_points {
        z_mean += zp;
    }
    z_mean /= two_n;

    let mut z_centered = DMatrix::zeros(p, 2 * n);
    for (i, zp) in z_points.iter().enumerate() {
        let d = (zp - &z_mean) * weight;
        z_centered.set_column(i, &d);
    }

    let sqrt_r = noise.sqrt_r();
    let mut z_compound = DMatrix::zeros(p, 2 * n + p);
    z_compound
        .view_mut((0, 0), (p, 2 * n))
        .copy_from(&z_centered);
    z_compound.view_mut((0, 2 * n), (p, p)).copy_from(&sqrt_r);
    let s_z = triangularize(&z_compound);

    for i in 0..p {
        if s_z[(i, i)] <= T::zero() {
            return Err(Error::Diverged(
                "singular innovation square-root factor".into(),
            ));
        }
    }

    let mut x_centered = DMatrix::zeros(n, 2 * n);
    for (i, point) in set.points.iter().enumerate() {
        let d = (point - &pred.mean) * weight;
        x_centered.set_column(i, &d);
    }

    let p_xz = &x_centered * z_centered.transpose();

    // W = (P_xz / S_zᵀ) / S_z via two triangular solves, never an inverse
    let y_t = s_z
        .solve_lower_triangular(&p_xz.transpose())
        .ok_or_else(|| Error::Diverged("innovation factor not solvable".into()))?;
    let w_t = s_z
        .transpose()
        .solve_upper_triangular(&y_t)
        .ok_or_else(|| Error::Diverged("innovation factor not solvable".into()))?;
    let gain = w_t.transpose();

    let mean = &pred.mean + &gain * (z - &z_mean);
    if !all_finite(&mean) {
        return Err(Error::Diverged(
            "non-finite state after measurement update".into(),
        ));
    }

    let residual_factor = &x_centered - &gain * &z_centered;
    let gain_r = &gain * &sqrt_r;
    let mut compound = DMatrix::zeros(n, 2 * n + p);
    compound
        .view_mut((0, 0), (n, 2 * n))
        .copy_from(&residual_factor);
    compound.view_mut((0, 2 * n), (n, p)).copy_from(&gain_r);

    FilterEstimate::new(mean, triangularize(&compound))
}
