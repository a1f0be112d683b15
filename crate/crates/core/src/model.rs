//! State-space model abstraction used by the estimators.
//!
//! The continuous-time form is
//!
//! ```text
//! x' = A(x)·x + B·u + G·w
//! z  = C(x)·x + D·u + v
//! ```
//!
//! with a state-dependent transition matrix. Filters only see this trait,
//! so the quarter-car plant and the linear systems used as test oracles
//! share one code path.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// Continuous-time matrices evaluated at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousMatrices<T: Real> {
    /// State matrix, n×n. Rows belonging to estimated parameters are zero.
    pub a: DMatrix<T>,
    /// Input matrix, n×1.
    pub b: DVector<T>,
    /// Process-noise gain, n×m.
    pub g: DMatrix<T>,
    /// Measurement matrix, p×n.
    pub c: DMatrix<T>,
}

impl<T: Real> ContinuousMatrices<T> {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn measurement_dim(&self) -> usize {
        self.c.nrows()
    }
}

/// A plant the filters can run against.
pub trait StateSpaceModel<T: Real> {
    fn state_dim(&self) -> usize;

    fn measurement_dim(&self) -> usize;

    /// Evaluate `A(x)`, `B`, `G`, `C(x)` at the given state.
    fn continuous(&self, x: &DVector<T>) -> ContinuousMatrices<T>;

    /// Jacobian of the drift `x ↦ A(x)·x`. Equals `A` for linear systems.
    fn process_jacobian(&self, x: &DVector<T>) -> DMatrix<T>;

    /// Jacobian of the measurement map `x ↦ C(x)·x`. Equals `C` when the
    /// measurement matrix is state-independent.
    fn measurement_jacobian(&self, x: &DVector<T>) -> DMatrix<T> {
        self.continuous(x).c
    }

    /// Direct input feed-through `D` of the measurement, p×1.
    ///
    /// Zero for the 2-DOF quarter car; the 1-DOF variant feeds the terrain
    /// elevation rate straight into the measured acceleration.
    fn feedthrough(&self) -> DVector<T> {
        DVector::zeros(self.measurement_dim())
    }
}

/// A plain linear time-invariant system. Mainly a harness for the
/// Kalman-equivalence checks, where the cubature filter must coincide with
/// the closed-form linear filter.
#[derive(Clone, Debug)]
pub struct LinearStateSpace<T: Real> {
    pub a: DMatrix<T>,
    pub b: DVector<T>,
    pub g: DMatrix<T>,
    pub c: DMatrix<T>,
}

impl<T: Real> StateSpaceModel<T> for LinearStateSpace<T> {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn measurement_dim(&self) -> usize {
        self.c.nrows()
    }

    fn continuous(&self, _x: &DVector<T>) -> ContinuousMatrices<T> {
        ContinuousMatrices {
            a: self.a.clone(),
            b: self.b.clone(),
            g: self.g.clone(),
            c: self.c.clone(),
        }
    }

    fn process_jacobian(&self, _x: &DVector<T>) -> DMatrix<T> {
        self.a.clone()
    }
}
