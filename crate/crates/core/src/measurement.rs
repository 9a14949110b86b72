//! From raw sensor streams to normalized vectorial outputs.
//!
//! A monocular VO front end reports the relative camera transform between
//! consecutive frames with the translation in an arbitrary, slowly drifting
//! scale. GPS reports velocity in the NED frame. Normalizing the VO
//! translation and the velocity-integrated displacement produces a pair of
//! unit vectors observing the same physical direction in the camera and NED
//! frames; that pair is the only attitude information the observer consumes,
//! which is why the unknown scale and the velocity time stamps drop out.

use nalgebra::Vector3;
use thiserror::Error;

use crate::so3::{Rotation, UnitDirection};

/// Default minimum NED displacement (meters) for a usable direction.
pub const DEFAULT_MIN_NORM: f64 = 0.05;

/// Default minimum VO translation norm (VO units) for a usable direction.
pub const DEFAULT_MIN_VO_NORM: f64 = 1e-4;

#[derive(Debug, Clone, Error)]
pub enum MeasurementError {
    #[error("velocity timestamps must increase: t_k = {t_k}, t_k1 = {t_k1}")]
    NonIncreasingTimestamps { t_k: f64, t_k1: f64 },
}

/// Relative camera transform between consecutive frames, as reported by VO.
/// The translation is expressed in the earlier camera frame and scaled by an
/// unknown factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeTransform {
    pub rot: Rotation,
    pub trans: Vector3<f64>,
}

/// One GPS velocity sample: NED components in m/s at time `t` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySample {
    pub t: f64,
    pub v: Vector3<f64>,
}

/// How the mean velocity over a sampling interval is approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityMode {
    /// Hold the earlier sample: adequate when velocity is nearly constant
    /// over the interval.
    Constant,
    /// Midpoint of the two endpoint samples: exact for linearly varying
    /// velocity.
    #[default]
    Linear,
}

impl std::str::FromStr for VelocityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" => Ok(VelocityMode::Constant),
            "linear" => Ok(VelocityMode::Linear),
            other => Err(format!("unknown velocity mode `{other}` (constant|linear)")),
        }
    }
}

/// The unknown VO scale (meters per VO unit). Only the synthetic generator
/// uses it; the observer never sees the scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleModel {
    pub d: f64,
}

impl ScaleModel {
    pub fn new(d: f64) -> Self {
        assert!(d > 0.0, "VO scale must be positive, got {d}");
        ScaleModel { d }
    }
}

/// One epoch of fused inputs for the observer.
///
/// `valid` is set only when both normalizations produced a direction; the
/// relative transform is always present so propagation can continue through
/// directionless epochs (stationary vehicle, missing GPS).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementFrame {
    pub rel: RelativeTransform,
    pub dir_cam: Option<UnitDirection>,
    pub dir_ned: Option<UnitDirection>,
}

impl MeasurementFrame {
    pub fn valid(&self) -> bool {
        self.dir_cam.is_some() && self.dir_ned.is_some()
    }

    /// Both directions, when the epoch carries attitude information.
    pub fn pair(&self) -> Option<(UnitDirection, UnitDirection)> {
        match (self.dir_cam, self.dir_ned) {
            (Some(c), Some(n)) => Some((c, n)),
            _ => None,
        }
    }
}

/// NED displacement over one interval from the velocity samples:
/// `(t_k1 - t_k) * v_bar` with `v_bar` chosen per [`VelocityMode`].
pub fn displacement_from_velocity(
    v_k: &VelocitySample,
    v_k1: &VelocitySample,
    mode: VelocityMode,
) -> Result<Vector3<f64>, MeasurementError> {
    if v_k1.t <= v_k.t {
        return Err(MeasurementError::NonIncreasingTimestamps {
            t_k: v_k.t,
            t_k1: v_k1.t,
        });
    }
    let dt = v_k1.t - v_k.t;
    let v_bar = match mode {
        VelocityMode::Constant => v_k.v,
        VelocityMode::Linear => 0.5 * (v_k.v + v_k1.v),
    };
    Ok(dt * v_bar)
}

/// Normalizes a displacement into a direction; `None` below `min_norm`
/// (a stationary epoch carries no direction information).
pub fn normalize_direction(w: &Vector3<f64>, min_norm: f64) -> Option<UnitDirection> {
    if w.norm() < min_norm {
        return None;
    }
    UnitDirection::new_normalize(*w)
}

/// Assembles one measurement epoch from the VO relative transform and the two
/// bracketing velocity samples.
pub fn make_frame(
    rel: &RelativeTransform,
    v_k: &VelocitySample,
    v_k1: &VelocitySample,
    mode: VelocityMode,
    min_norm: f64,
    min_vo_norm: f64,
) -> Result<MeasurementFrame, MeasurementError> {
    let dir_cam = normalize_direction(&rel.trans, min_vo_norm);
    let displacement = displacement_from_velocity(v_k, v_k1, mode)?;
    let dir_ned = normalize_direction(&displacement, min_norm);
    Ok(MeasurementFrame {
        rel: *rel,
        dir_cam,
        dir_ned,
    })
}

/// Manufactures the VO relative translation from ground truth: the NED
/// displacement rotated into the camera frame and divided by the scale.
pub fn synth_relative_translation(
    r_k: &Rotation,
    p_k: &Vector3<f64>,
    p_k1: &Vector3<f64>,
    scale: &ScaleModel,
) -> Vector3<f64> {
    r_k.rotate_back(&(p_k1 - p_k)) / scale.d
}
