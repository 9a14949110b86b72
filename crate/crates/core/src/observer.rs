//! The discrete-time gradient observer on SO(3).
//!
//! Each epoch carries a relative rotation from VO and, when the vehicle is
//! moving and GPS is present, a pair of unit vectors observing the motion
//! direction in the camera and NED frames. The observer left-multiplies the
//! estimate by the exponential of a gradient correction built from that pair,
//! then right-multiplies by the relative rotation:
//!
//! ```text
//! R_next = exp(hat((L (R u_cam - u_ned)) x (R u_cam))) * R * rel
//! ```
//!
//! [`ObserverState::step`] performs the whole epoch. When GPS runs slower
//! than the camera, use the two-stage form instead: [`ObserverState::update`]
//! commits the correction for the current epoch and [`ObserverState::predict`]
//! advances through an epoch with the relative rotation. Within an epoch the
//! update (if any) must be applied before the predict; `step` is exactly that
//! composition, so the two forms produce bit-identical trajectories.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::measurement::{MeasurementFrame, RelativeTransform};
use crate::so3::{exp_so3, hat, project_to_so3, AxisVector, Rotation, UnitDirection};

#[derive(Debug, Clone, Error)]
pub enum GainError {
    #[error("scalar gain must lie in (0, 2), got {0}")]
    ScalarOutOfRange(f64),
    #[error("gain matrix is not symmetric: residual {0:.3e}")]
    NotSymmetric(f64),
    #[error("gain matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Correction gain: either the scalar form `l * I` with `0 < l < 2` (the only
/// form the convergence-rate machinery accepts) or a full symmetric
/// positive-definite matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GainSpec {
    Scalar(f64),
    Matrix(Matrix3<f64>),
}

/// Symmetry tolerance for matrix gains.
const SYMMETRY_TOL: f64 = 1e-12;

impl GainSpec {
    /// Scalar gain `l * I`; must lie in `(0, 2)`.
    pub fn scalar(l: f64) -> Result<Self, GainError> {
        if l > 0.0 && l < 2.0 {
            Ok(GainSpec::Scalar(l))
        } else {
            Err(GainError::ScalarOutOfRange(l))
        }
    }

    /// Full symmetric positive-definite gain matrix.
    pub fn matrix(m: Matrix3<f64>) -> Result<Self, GainError> {
        let asym = (m - m.transpose()).norm();
        if asym > SYMMETRY_TOL {
            return Err(GainError::NotSymmetric(asym));
        }
        // symmetric + successful Cholesky <=> positive definite
        if m.cholesky().is_none() {
            return Err(GainError::NotPositiveDefinite);
        }
        Ok(GainSpec::Matrix(m))
    }

    /// The scalar `l` when this is the scalar form.
    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            GainSpec::Scalar(l) => Some(*l),
            GainSpec::Matrix(_) => None,
        }
    }

    /// Applies `L` to a residual vector.
    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        match self {
            GainSpec::Scalar(l) => *l * v,
            GainSpec::Matrix(m) => m * v,
        }
    }

    /// Largest eigenvalue of `L` (bounds the cost).
    pub fn max_eigenvalue(&self) -> f64 {
        match self {
            GainSpec::Scalar(l) => *l,
            GainSpec::Matrix(m) => m.symmetric_eigenvalues().max(),
        }
    }
}

/// Alignment cost between the rotated camera direction and the NED direction:
/// `(R u_cam - u_ned)^T L (R u_cam - u_ned)`.
///
/// Zero exactly when `R u_cam == u_ned`; never exceeds `4 * lambda_max(L)`.
pub fn cost(r_hat: &Rotation, dir_cam: &UnitDirection, dir_ned: &UnitDirection, gain: &GainSpec) -> f64 {
    let residual = r_hat.rotate(dir_cam.as_vector()) - dir_ned.as_vector();
    residual.dot(&gain.apply(&residual))
}

/// Gradient correction vector `omega = (L (R u_cam - u_ned)) x (R u_cam)`.
///
/// `exp_so3(omega) * r_hat` is the corrected estimate; the vector vanishes at
/// alignment, at anti-alignment, and whenever the weighted residual is
/// parallel to the rotated camera direction.
pub fn correction(
    r_hat: &Rotation,
    dir_cam: &UnitDirection,
    dir_ned: &UnitDirection,
    gain: &GainSpec,
) -> AxisVector {
    let predicted = r_hat.rotate(dir_cam.as_vector());
    let residual = predicted - dir_ned.as_vector();
    gain.apply(&residual).cross(&predicted)
}

/// Observer state: the committed estimate `r_hat` (last corrected epoch) and
/// the propagated estimate `r_hat_pred` carrying all relative rotations seen
/// so far. After `step` or `update` the two coincide; between GPS epochs only
/// `r_hat_pred` advances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverState {
    pub r_hat: Rotation,
    pub r_hat_pred: Rotation,
    /// Epoch index: number of relative rotations consumed.
    pub k: u64,
    compositions_since_projection: u32,
    projection_period: u32,
}

impl ObserverState {
    /// Starts from the identity attitude, the default when nothing is known
    /// about the initial camera orientation.
    pub fn new() -> Self {
        Self::with_initial(Rotation::identity())
    }

    /// Starts from a known initial attitude (e.g. for drift-only studies).
    pub fn with_initial(r0: Rotation) -> Self {
        ObserverState {
            r_hat: r0,
            r_hat_pred: r0,
            k: 0,
            compositions_since_projection: 0,
            projection_period: crate::so3::DEFAULT_PROJECTION_PERIOD,
        }
    }

    /// Overrides how often the estimate is re-orthonormalized.
    pub fn with_projection_period(mut self, period: u32) -> Self {
        assert!(period > 0, "projection period must be positive");
        self.projection_period = period;
        self
    }

    /// The current best attitude estimate.
    pub fn attitude(&self) -> &Rotation {
        &self.r_hat_pred
    }

    /// One full epoch: correction (when the frame carries a direction pair)
    /// followed by propagation with the relative rotation.
    pub fn step(self, frame: &MeasurementFrame, gain: &GainSpec) -> Self {
        let corrected = match frame.pair() {
            Some((dir_cam, dir_ned)) => self.update(&dir_cam, &dir_ned, gain),
            None => self,
        };
        corrected.predict(&frame.rel)
    }

    /// Prediction stage: advances the propagated estimate through one epoch.
    pub fn predict(self, rel: &RelativeTransform) -> Self {
        let mut next = self;
        next.r_hat_pred = next.r_hat_pred * rel.rot;
        next.k += 1;
        next.after_composition();
        next
    }

    /// Update stage: commits the gradient correction computed at the
    /// propagated estimate. Call before `predict` within an epoch.
    pub fn update(self, dir_cam: &UnitDirection, dir_ned: &UnitDirection, gain: &GainSpec) -> Self {
        let mut next = self;
        let omega = correction(&next.r_hat_pred, dir_cam, dir_ned, gain);
        next.r_hat_pred = exp_so3(&omega) * next.r_hat_pred;
        next.r_hat = next.r_hat_pred;
        next.after_composition();
        next
    }

    fn after_composition(&mut self) {
        self.compositions_since_projection += 1;
        if self.compositions_since_projection >= self.projection_period {
            self.r_hat_pred = project_to_so3(self.r_hat_pred.matrix())
                .expect("propagated estimate stays near SO(3)");
            self.r_hat = project_to_so3(self.r_hat.matrix())
                .expect("committed estimate stays near SO(3)");
            self.compositions_since_projection = 0;
        }
    }
}

impl Default for ObserverState {
    fn default() -> Self {
        Self::new()
    }
}

/// The correction as a matrix factor, `exp(hat(omega))`. Exposed for tests
/// and diagnostics that inspect one epoch in isolation.
pub fn correction_factor(
    r_hat: &Rotation,
    dir_cam: &UnitDirection,
    dir_ned: &UnitDirection,
    gain: &GainSpec,
) -> Matrix3<f64> {
    exp_so3(&correction(r_hat, dir_cam, dir_ned, gain)).into_matrix()
}

/// Directional derivative of the cost along a tangent direction `delta`,
/// i.e. `d/ds cost(exp(s delta) R, ...)` at `s = 0`. Equals
/// `-2 <correction, delta>`; kept as an explicit form for gradient checks.
pub fn cost_directional_derivative(
    r_hat: &Rotation,
    dir_cam: &UnitDirection,
    dir_ned: &UnitDirection,
    gain: &GainSpec,
    delta: &AxisVector,
) -> f64 {
    let predicted = r_hat.rotate(dir_cam.as_vector());
    let residual = predicted - dir_ned.as_vector();
    2.0 * gain.apply(&residual).dot(&(hat(delta) * predicted))
}
