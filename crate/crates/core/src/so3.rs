//! Rotation-group arithmetic on SO(3).
//!
//! Rotations are stored as 3x3 direction-cosine matrices; every quantity the
//! observer propagates (state, error, relative transform) is matrix-valued, so
//! a matrix representation keeps the algebra one-to-one with the update laws.
//! Long composition chains drift away from orthonormality, so callers that
//! multiply many rotations re-project periodically via [`project_to_so3`]
//! (the observer does this every [`DEFAULT_PROJECTION_PERIOD`] compositions).

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use thiserror::Error;

/// Tangent-space 3-vector: a rotation increment in radians, or a linearized
/// attitude error.
pub type AxisVector = Vector3<f64>;

/// Orthonormality and determinant tolerance for a valid [`Rotation`].
pub const ROTATION_TOL: f64 = 1e-9;

/// Unit-norm tolerance for a valid [`UnitDirection`].
pub const UNIT_TOL: f64 = 1e-12;

/// Re-orthonormalize after this many rotation compositions by default.
pub const DEFAULT_PROJECTION_PERIOD: u32 = 256;

/// Below this angle exp/log switch to their Taylor branches. Keeps the
/// relative error of the Rodrigues coefficients below 1e-12 in f64.
const SMALL_ANGLE: f64 = 1e-8;

/// Angles above `PI - NEAR_PI` use the symmetric-part axis extraction.
const NEAR_PI: f64 = 1e-3;

/// Skew-symmetry residual accepted by [`vee`].
const SKEW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum So3Error {
    #[error("matrix is not a rotation: orthogonality residual {residual:.3e}")]
    NotOrthogonal { residual: f64 },
    #[error("matrix is not a rotation: determinant {det:.6}")]
    BadDeterminant { det: f64 },
    #[error("matrix is not skew-symmetric: residual {residual:.3e}")]
    NotSkew { residual: f64 },
    #[error("cannot project onto SO(3): determinant {det:.6e} is not positive")]
    NonPositiveDeterminant { det: f64 },
    #[error("vector is not unit length: norm {norm:.17}")]
    NotUnit { norm: f64 },
}

/// A member of SO(3): a 3x3 matrix with `R^T R = I` and `det R = +1`,
/// both within [`ROTATION_TOL`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Validates orthonormality and determinant before wrapping.
    pub fn try_new(m: Matrix3<f64>) -> Result<Self, So3Error> {
        let residual = orthogonality_residual(&m);
        if residual > ROTATION_TOL {
            return Err(So3Error::NotOrthogonal { residual });
        }
        let det = m.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(So3Error::BadDeterminant { det });
        }
        Ok(Rotation(m))
    }

    /// Wraps without validating. The caller guarantees the invariants.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix3<f64> {
        self.0
    }

    /// The inverse rotation (transpose).
    pub fn inverse(&self) -> Self {
        Rotation(self.0.transpose())
    }

    /// Applies the rotation to a vector.
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Applies the inverse rotation to a vector.
    pub fn rotate_back(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.transpose() * v
    }

    /// Frobenius norm of `R^T R - I`.
    pub fn orthogonality_residual(&self) -> f64 {
        orthogonality_residual(&self.0)
    }

    pub fn is_valid(&self) -> bool {
        self.orthogonality_residual() <= ROTATION_TOL
            && (self.0.determinant() - 1.0).abs() <= ROTATION_TOL
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vector3<f64>> for Rotation {
    type Output = Vector3<f64>;

    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

fn orthogonality_residual(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}

/// A unit vector on the sphere S^2, e.g. a normalized motion direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDirection(Vector3<f64>);

impl UnitDirection {
    /// Validates that `v` is unit length within [`UNIT_TOL`].
    pub fn try_new(v: Vector3<f64>) -> Result<Self, So3Error> {
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(So3Error::NotUnit { norm });
        }
        Ok(UnitDirection(v))
    }

    /// Normalizes an arbitrary vector; `None` when the norm is zero or not
    /// finite (no direction information).
    pub fn new_normalize(v: Vector3<f64>) -> Option<Self> {
        let norm = v.norm();
        if norm > 0.0 && norm.is_finite() {
            Some(UnitDirection(v / norm))
        } else {
            None
        }
    }

    pub fn as_vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn into_vector(self) -> Vector3<f64> {
        self.0
    }

    /// Rotates the direction into another frame.
    pub fn rotated_by(&self, r: &Rotation) -> UnitDirection {
        // A rotation preserves the norm to machine precision.
        UnitDirection(r.rotate(&self.0))
    }
}

/// The isomorphism between R^3 and skew-symmetric matrices:
/// `hat(v) * b == v.cross(&b)` for all `b`.
pub fn hat(v: &AxisVector) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Inverse of [`hat`]. Errors when the input is not skew-symmetric within
/// `1e-9` (Frobenius norm of `S + S^T`).
pub fn vee(s: &Matrix3<f64>) -> Result<AxisVector, So3Error> {
    let residual = (s + s.transpose()).norm();
    if residual > SKEW_TOL {
        return Err(So3Error::NotSkew { residual });
    }
    Ok(Vector3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)]))
}

/// Exponential map via the Rodrigues formula.
///
/// For angles below 1e-8 the two Rodrigues coefficients `sin(t)/t` and
/// `(1-cos(t))/t^2` are replaced by their second-order Taylor expansions to
/// avoid the 0/0 limit.
pub fn exp_so3(v: &AxisVector) -> Rotation {
    let theta_sq = v.norm_squared();
    let vx = hat(v);
    let (a, b) = if theta_sq < SMALL_ANGLE * SMALL_ANGLE {
        (1.0 - theta_sq / 6.0, 0.5 - theta_sq / 24.0)
    } else {
        let theta = theta_sq.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta_sq)
    };
    Rotation(Matrix3::identity() + a * vx + b * (vx * vx))
}

/// Logarithm map: the rotation vector with norm in `[0, pi]`.
///
/// The angle comes from `atan2` of the skew and symmetric parts, which stays
/// well conditioned all the way to pi. At pi the sign of the axis is
/// ambiguous; the deterministic rule is: first component larger than 1e-9 in
/// magnitude is made positive.
pub fn log_so3(r: &Rotation) -> AxisVector {
    let m = r.matrix();
    // vee(R - R^T) = 2 sin(theta) * axis
    let w = Vector3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    );
    let sin_theta = 0.5 * w.norm();
    let cos_theta = 0.5 * (m.trace() - 1.0);
    let theta = sin_theta.atan2(cos_theta);

    if theta < SMALL_ANGLE {
        // theta/(2 sin theta) ~ 1/2 * (1 + theta^2/6)
        return 0.5 * (1.0 + theta * theta / 6.0) * w;
    }
    if theta < PI - NEAR_PI {
        return (theta / (2.0 * sin_theta)) * w;
    }

    // Near pi the skew part cancels; the symmetric part gives
    // (R + R^T)/2 - cos(theta) I = (1 - cos(theta)) * axis * axis^T,
    // which is well conditioned there. Pick the strongest column.
    let sym = 0.5 * (m + m.transpose()) - Matrix3::from_diagonal_element(cos_theta);
    let mut j = 0;
    for i in 1..3 {
        if sym[(i, i)] > sym[(j, j)] {
            j = i;
        }
    }
    let col = sym.column(j).into_owned();
    let mut axis = col / col.norm();
    let alignment = axis.dot(&w);
    if alignment.abs() > 1e-9 {
        // sin(theta) > 0 below pi fixes the sign
        if alignment < 0.0 {
            axis = -axis;
        }
    } else if let Some(lead) = axis.iter().find(|c| c.abs() > 1e-9) {
        if *lead < 0.0 {
            axis = -axis;
        }
    }
    theta * axis
}

/// Rotation angle in `[0, pi]`: `acos(1 - ||I - R||_F^2 / 4)`, which reduces
/// to `acos((tr R - 1)/2)`. Equals the norm of [`log_so3`].
///
/// Evaluated through `atan2` of the skew and symmetric parts; the plain
/// `acos` loses half the significant digits near 0 and pi, where this form
/// stays fully conditioned.
pub fn angle_of(r: &Rotation) -> f64 {
    let m = r.matrix();
    let w = Vector3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    );
    let sin_theta = 0.5 * w.norm();
    let cos_theta = (0.5 * (m.trace() - 1.0)).clamp(-1.0, 1.0);
    sin_theta.atan2(cos_theta)
}

/// Nearest rotation in Frobenius norm: the polar factor from the SVD with the
/// sign corrected onto the weakest singular direction. Errors when
/// `det(M) <= 0` (no nearby rotation).
pub fn project_to_so3(m: &Matrix3<f64>) -> Result<Rotation, So3Error> {
    let det = m.determinant();
    if det <= 0.0 {
        return Err(So3Error::NonPositiveDeterminant { det });
    }
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd of 3x3 always yields u");
    let v_t = svd.v_t.expect("svd of 3x3 always yields v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut weakest = 0;
        for i in 1..3 {
            if svd.singular_values[i] < svd.singular_values[weakest] {
                weakest = i;
            }
        }
        let mut u_flipped = u;
        u_flipped.column_mut(weakest).scale_mut(-1.0);
        r = u_flipped * v_t;
    }
    Ok(Rotation(r))
}

/// Random rotation: axis uniform on the sphere, angle uniform on
/// `(0, max_angle]`. Deterministic for a seeded generator.
///
/// Panics when `max_angle` is outside `(0, pi]`.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R, max_angle: f64) -> Rotation {
    assert!(
        max_angle > 0.0 && max_angle <= PI,
        "max_angle must lie in (0, pi], got {max_angle}"
    );
    let axis: [f64; 3] = UnitSphere.sample(rng);
    let angle = max_angle * (1.0 - rng.gen::<f64>());
    exp_so3(&(angle * Vector3::from(axis)))
}

/// ZYX (yaw-pitch-roll) Euler decomposition in the NED convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Set when the pitch is within 1e-6 of +-pi/2; yaw is then forced to
    /// zero and roll absorbs the remaining rotation.
    pub gimbal_lock: bool,
}

/// Builds `Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn rotation_from_euler(roll: f64, pitch: f64, yaw: f64) -> Rotation {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    Rotation(Matrix3::new(
        cy * cp,
        -sy * cr + cy * sp * sr,
        sy * sr + cy * sp * cr,
        sy * cp,
        cy * cr + sy * sp * sr,
        -cy * sr + sy * sp * cr,
        -sp,
        cp * sr,
        cp * cr,
    ))
}

/// Decomposes into ZYX (yaw-pitch-roll) Euler angles, NED convention.
///
/// Round-trips with [`rotation_from_euler`] away from the pitch singularity.
pub fn rotation_to_euler(r: &Rotation) -> EulerAngles {
    let m = r.matrix();
    let sp = (-m[(2, 0)]).clamp(-1.0, 1.0);
    let pitch = sp.asin();
    if std::f64::consts::FRAC_PI_2 - pitch.abs() <= 1e-6 {
        // Only roll - yaw (pitch up) or roll + yaw (pitch down) is
        // observable; put the whole remainder in roll.
        let roll = if sp > 0.0 {
            m[(0, 1)].atan2(m[(0, 2)])
        } else {
            (-m[(0, 1)]).atan2(-m[(0, 2)])
        };
        return EulerAngles {
            roll,
            pitch,
            yaw: 0.0,
            gimbal_lock: true,
        };
    }
    EulerAngles {
        roll: m[(2, 1)].atan2(m[(2, 2)]),
        pitch,
        yaw: m[(1, 0)].atan2(m[(0, 0)]),
        gimbal_lock: false,
    }
}
