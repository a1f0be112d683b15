//! Truncated-series discretization of the continuous model.
//!
//! The transition matrix is the Taylor partial sum of `exp(A·Δt)`; input and
//! noise gains use the term-wise integrated series
//!
//! ```text
//! Bk = [Σ_j A^j·Δt^(j+1)/(j+1)!]·B
//! ```
//!
//! which is the zero-order-hold gain when the series is carried to the same
//! order. Stopping at the fourth order reproduces the reference exponential
//! closely at ride-dynamics step sizes while staying cheap enough to run
//! per cubature point.

use nalgebra::DMatrix;

use crate::model::ContinuousMatrices;
use crate::scalar::Real;

pub const DEFAULT_SERIES_ORDER: usize = 4;

/// Discrete-time model over one sample interval.
#[derive(Clone, Debug)]
pub struct DiscreteModel<T: Real> {
    pub ak: DMatrix<T>,
    pub bk: nalgebra::DVector<T>,
    pub gk: DMatrix<T>,
    pub ck: DMatrix<T>,
    pub qk: DMatrix<T>,
    pub rk: DMatrix<T>,
    pub dt: T,
}

/// Taylor partial sum `Σ_{j=0..order} (A·Δt)^j / j!`.
pub fn taylor_expm<T: Real>(a: &DMatrix<T>, dt: T, order: usize) -> DMatrix<T> {
    let n = a.nrows();
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for j in 1..=order {
        term = (&term * a) * (dt / T::from_usize(j).unwrap());
        sum += &term;
    }
    sum
}

/// Term-wise integral of the transition series over the step:
/// `Σ_{j=0..order} A^j·Δt^(j+1)/(j+1)!`. Multiplying by `B` or `G` yields
/// the discrete input and noise gains.
pub fn taylor_transition_integral<T: Real>(a: &DMatrix<T>, dt: T, order: usize) -> DMatrix<T> {
    let n = a.nrows();
    let mut sum = DMatrix::identity(n, n) * dt;
    let mut term = DMatrix::identity(n, n) * dt;
    for j in 1..=order {
        term = (&term * a) * (dt / T::from_usize(j + 1).unwrap());
        sum += &term;
    }
    sum
}

/// Discretize the continuous model at the default series order, with the
/// process covariance approximated as `Qk = Δt·Gk·Q·Gkᵀ`.
pub fn discretize<T: Real>(
    cont: &ContinuousMatrices<T>,
    q: &DMatrix<T>,
    r: &DMatrix<T>,
    dt: T,
) -> DiscreteModel<T> {
    discretize_with_order(cont, q, r, dt, DEFAULT_SERIES_ORDER)
}

pub fn discretize_with_order<T: Real>(
    cont: &ContinuousMatrices<T>,
    q: &DMatrix<T>,
    r: &DMatrix<T>,
    dt: T,
    order: usize,
) -> DiscreteModel<T> {
    let ak = taylor_expm(&cont.a, dt, order);
    let integral = taylor_transition_integral(&cont.a, dt, order);
    let bk = &integral * &cont.b;
    let gk = integral * &cont.g;
    let qk = (&gk * q * gk.transpose()) * dt;
    DiscreteModel {
        ak,
        bk,
        gk,
        ck: cont.c.clone(),
        qk,
        rk: r.clone(),
        dt,
    }
}
