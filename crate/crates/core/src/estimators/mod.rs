//! Joint state/parameter estimators.
//!
//! [`sckf`] implements the square-root cubature Kalman filter: 2n
//! equal-weight cubature points propagated through the per-point discretized
//! model, with every covariance kept as a lower-triangular factor refreshed
//! by QR. [`ekf`] is the extended Kalman filter baseline operating on the
//! full covariance with discretized Jacobians.

mod ekf;
mod sckf;

pub use ekf::ekf_step;
pub use sckf::{sckf_correct, sckf_predict};

use crate::model::StateSpaceModel;

/// Per-step process covariance a filter assumes at the given state; the
/// truth simulator injects noise of exactly this covariance.
pub fn process_noise_covariance<T: Real, M: StateSpaceModel<T>>(
    model: &M,
    mean: &nalgebra::DVector<T>,
    noise: &NoiseConfig<T>,
    dt: T,
) -> nalgebra::DMatrix<T> {
    sckf::build_qk(model, mean, noise, dt)
}

/// Square root of a symmetric PSD matrix (Cholesky with an eigenvalue
/// fallback for the semidefinite case).
pub fn sqrt_covariance<T: Real>(m: &nalgebra::DMatrix<T>) -> nalgebra::DMatrix<T> {
    sqrt_psd(m)
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// How the per-step process covariance is produced from the continuous
/// noise intensities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QkModel {
    /// `Qk = Δt·Gk·Q·Gkᵀ` with the discretized gain. The appended-parameter
    /// entry then scales as Δt³·q, which freezes the stiffness estimate once
    /// the initial uncertainty is spent.
    ScaledGain,
    /// Same motion-state block, but the appended parameter keeps the plain
    /// random-walk convention `Qk(n,n) = Δt·q_n`, so its per-step drift
    /// variance is the continuous intensity integrated over the step. This
    /// is what lets the estimate track terrain changes.
    ParameterRandomWalk,
}

/// Process and measurement noise description (diagonal intensities).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig<T> {
    pub q_diag: Vec<T>,
    pub r_diag: Vec<T>,
    pub qk_model: QkModel,
}

impl<T: Real> NoiseConfig<T> {
    pub fn new(q_diag: Vec<T>, r_diag: Vec<T>, qk_model: QkModel) -> Result<Self> {
        if q_diag.iter().any(|&q| q < T::zero()) {
            return Err(Error::domain("process noise variances must be nonnegative"));
        }
        if r_diag.iter().any(|&r| r < T::zero()) {
            return Err(Error::domain("measurement noise variances must be nonnegative"));
        }
        Ok(NoiseConfig {
            q_diag,
            r_diag,
            qk_model,
        })
    }

    /// The values used throughout the reference experiments:
    /// `Q = diag[1e-5 m², 1e-3 (m/s)², 1e-5 m², 1e-3 (m/s)², 1e5 (N/m)²]`,
    /// `R = diag[0.5, 0.5] (m/s²)²`, in the tracking-capable Qk convention.
    pub fn default_two_dof() -> Self {
        NoiseConfig {
            q_diag: [1e-5, 1e-3, 1e-5, 1e-3, 1e5]
                .iter()
                .map(|&q| crate::scalar::lit(q))
                .collect(),
            r_diag: vec![crate::scalar::lit(0.5); 2],
            qk_model: QkModel::ParameterRandomWalk,
        }
    }

    /// Same intensities reduced to the single-mass model
    /// (`Q = diag[1e-5, 1e-3, 1e5]`, `R = [0.5]`). Defaults to the
    /// fully-discretized Qk: the rover case surveys one constant terrain,
    /// where a static-parameter model converges instead of wandering.
    pub fn default_one_dof() -> Self {
        NoiseConfig {
            q_diag: [1e-5, 1e-3, 1e5]
                .iter()
                .map(|&q| crate::scalar::lit(q))
                .collect(),
            r_diag: vec![crate::scalar::lit(0.5)],
            qk_model: QkModel::ScaledGain,
        }
    }

    pub fn with_qk_model(mut self, model: QkModel) -> Self {
        self.qk_model = model;
        self
    }

    pub fn q_matrix(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&DVector::from_vec(self.q_diag.clone()))
    }

    pub fn r_matrix(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&DVector::from_vec(self.r_diag.clone()))
    }

    pub fn sqrt_r(&self) -> DMatrix<T> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.r_diag.len(),
            self.r_diag.iter().map(|&r| r.sqrt()),
        ))
    }
}

/// State mean plus lower-triangular square-root covariance factor,
/// `P = S·Sᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterEstimate<T: Real> {
    pub mean: DVector<T>,
    pub sqrt_cov: DMatrix<T>,
}

impl<T: Real> FilterEstimate<T> {
    pub fn new(mean: DVector<T>, sqrt_cov: DMatrix<T>) -> Result<Self> {
        if sqrt_cov.nrows() != mean.len() || sqrt_cov.ncols() != mean.len() {
            return Err(Error::Dimension {
                expected: mean.len(),
                actual: sqrt_cov.nrows(),
                context: "square-root covariance factor",
            });
        }
        Ok(FilterEstimate { mean, sqrt_cov })
    }

    /// Build from a diagonal initial covariance.
    pub fn from_diagonal_covariance(mean: DVector<T>, p_diag: &[T]) -> Self {
        let s = DMatrix::from_diagonal(&DVector::from_iterator(
            p_diag.len(),
            p_diag.iter().map(|&p| p.sqrt()),
        ));
        FilterEstimate { mean, sqrt_cov: s }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Reconstruct the full covariance.
    pub fn covariance(&self) -> DMatrix<T> {
        &self.sqrt_cov * self.sqrt_cov.transpose()
    }
}

/// The 2n equal-weight cubature points of an estimate.
#[derive(Clone, Debug)]
pub struct CubatureSet<T: Real> {
    pub points: Vec<DVector<T>>,
}

impl<T: Real> CubatureSet<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Equal-weight sample mean of the set.
    pub fn mean(&self) -> DVector<T> {
        let n = self.points[0].len();
        let mut sum = DVector::zeros(n);
        for p in &self.points {
            sum += p;
        }
        sum / T::from_usize(self.points.len()).unwrap()
    }

    /// Equal-weight sample covariance around the sample mean.
    pub fn covariance(&self) -> DMatrix<T> {
        let mean = self.mean();
        let n = mean.len();
        let mut cov = DMatrix::zeros(n, n);
        for p in &self.points {
            let d = p - &mean;
            cov += &d * d.transpose();
        }
        cov / T::from_usize(self.points.len()).unwrap()
    }
}

/// Evaluate the cubature points `X_i = S·ξ_i + x̂` with
/// `ξ = √n·[I  −I]`.
pub fn cubature_points<T: Real>(est: &FilterEstimate<T>) -> CubatureSet<T> {
    let n = est.dim();
    let scale = T::from_usize(n).unwrap().sqrt();
    let mut points = Vec::with_capacity(2 * n);
    for i in 0..n {
        let offset = est.sqrt_cov.column(i) * scale;
        points.push(&est.mean + &offset);
    }
    for i in 0..n {
        let offset = est.sqrt_cov.column(i) * scale;
        points.push(&est.mean - &offset);
    }
    CubatureSet { points }
}

/// Compress a rectangular factor `Z` (n×m, m ≥ n) into the lower-triangular
/// `S` with `S·Sᵀ = Z·Zᵀ`, via QR of `Zᵀ`. Column signs are flipped so the
/// diagonal is nonnegative.
pub fn triangularize<T: Real>(z: &DMatrix<T>) -> DMatrix<T> {
    let n = z.nrows();
    debug_assert!(z.ncols() >= n, "triangularize needs at least n columns");
    let qr = z.transpose().qr();
    let r = qr.r();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            s[(i, j)] = r[(j, i)];
        }
    }
    for j in 0..n {
        if s[(j, j)] < T::zero() {
            for i in 0..n {
                s[(i, j)] = -s[(i, j)];
            }
        }
    }
    s
}

/// Square root of a symmetric PSD matrix: Cholesky when definite, symmetric
/// eigendecomposition with clipped negatives otherwise.
pub(crate) fn sqrt_psd<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    if let Some(chol) = m.clone().cholesky() {
        return chol.l();
    }
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut root = eig.eigenvectors;
    for j in 0..n {
        let lambda = if eig.eigenvalues[j] > T::zero() {
            eig.eigenvalues[j].sqrt()
        } else {
            T::zero()
        };
        for i in 0..n {
            root[(i, j)] *= lambda;
        }
    }
    root
}

pub(crate) fn all_finite<T: Real>(v: &DVector<T>) -> bool {
    v.iter().all(|x| x.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cubature_points_of_identity_factor() {
        let est = FilterEstimate::<f64>::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        let set = cubature_points(&est);
        let s2 = 2.0f64.sqrt();
        assert_eq!(set.len(), 4);
        assert_relative_eq!(set.points[0][0], s2);
        assert_relative_eq!(set.points[1][1], s2);
        assert_relative_eq!(set.points[2][0], -s2);
        assert_relative_eq!(set.points[3][1], -s2);
    }

    #[test]
    fn point_mean_is_exact() {
        let mean = DVector::from_vec(vec![1.5, -0.3, 7.0]);
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, -1.0, 0.5, 0.0, 0.3, 0.1, 1.2]);
        let est = FilterEstimate::new(mean.clone(), s).unwrap();
        let set = cubature_points(&est);
        let m = set.mean();
        for i in 0..3 {
            assert_relative_eq!(m[i], mean[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn point_covariance_reproduces_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let n = rng.gen_range(2..6);
            let mut s = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    s[(i, j)] = rng.gen_range(-1.0..1.0);
                }
                s[(i, i)] += 1.5;
            }
            let mean = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
            let est = FilterEstimate::new(mean, s.clone()).unwrap();
            let cov = cubature_points(&est).covariance();
            let expected = &s * s.transpose();
            for i in 0..n {
                for j in 0..n {
                    assert_relative_eq!(cov[(i, j)], expected[(i, j)], max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn triangularize_identity() {
        let z = DMatrix::<f64>::identity(3, 3);
        assert_eq!(triangularize(&z), z);
    }

    #[test]
    fn triangularize_rank_deficient_by_hand() {
        let z = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 0.0, 0.0]);
        let s = triangularize(&z);
        assert_relative_eq!(s[(0, 0)], 5.0, epsilon = 1e-12);
        assert_relative_eq!(s[(1, 1)], 0.0, epsilon = 1e-12);
        assert_relative_eq!(s[(1, 0)], 0.0, epsilon = 1e-12);

        let zero = DMatrix::<f64>::zeros(3, 5);
        assert_eq!(triangularize(&zero), DMatrix::zeros(3, 3));
    }

    #[test]
    fn triangularize_preserves_gram_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(1..6);
            let m = n + rng.gen_range(0..7);
            let z = DMatrix::<f64>::from_fn(n, m, |_, _| rng.gen_range(-3.0..3.0));
            let s = triangularize(&z);
            let lhs = &s * s.transpose();
            let rhs = &z * z.transpose();
            for i in 0..n {
                for j in 0..n {
                    assert_relative_eq!(lhs[(i, j)], rhs[(i, j)], max_relative = 1e-10);
                }
                assert!(s[(i, i)] >= 0.0);
                for j in (i + 1)..n {
                    assert_eq!(s[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn noise_config_validation() {
        assert!(NoiseConfig::new(vec![-1.0], vec![0.5], QkModel::ScaledGain).is_err());
        assert!(NoiseConfig::new(vec![1.0], vec![-0.5], QkModel::ScaledGain).is_err());
        let ok = NoiseConfig::<f64>::default_two_dof();
        assert_eq!(ok.q_diag.len(), 5);
        assert_eq!(ok.r_diag.len(), 2);
    }
}
