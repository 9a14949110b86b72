//! Executable stability machinery for the gradient observer.
//!
//! The estimation error `E = r_hat * r_true^T` evolves autonomously under the
//! observer, driven only by the NED motion directions. This module provides
//! that error map, its linearization about the identity, the Lyapunov
//! decrement of the linearized dynamics, persistency-of-excitation statistics
//! over direction windows, and the resulting per-step convergence-rate bound
//! together with the gain that maximizes it.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use thiserror::Error;

use crate::observer::GainSpec;
use crate::so3::{exp_so3, AxisVector, Rotation, UnitDirection};

/// Eigenvalues below this are reported as an exact PE failure (beta = 0).
pub const PE_EIGENVALUE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Error)]
pub enum AnalysisError {
    #[error("direction sequence of length {len} is shorter than the window of {window} samples")]
    SequenceTooShort { len: usize, window: usize },
    #[error("persistency of excitation violated (beta = 0): no rate bound exists")]
    PeViolated,
    #[error("scalar gain must lie in (0, 2), got {0}")]
    GainOutOfRange(f64),
}

/// Persistency-of-excitation statistics over a direction stream: the window
/// parameter `t` (window length minus one) and `beta`, the smallest
/// eigenvalue of the averaged projector, minimized over all windows.
///
/// `beta = 0` means some window saw an effectively constant direction
/// (a straight-line trajectory); the attitude is then not recoverable from
/// that window alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PEWindowStats {
    /// Window length minus one; the rate formula's horizon parameter.
    pub t: usize,
    /// Worst-window minimum eigenvalue of the averaged projector, in [0, 1].
    pub beta: f64,
}

impl PEWindowStats {
    pub fn new(t: usize, beta: f64) -> Self {
        assert!(t >= 1, "window parameter must be at least 1");
        assert!((0.0..=1.0).contains(&beta), "beta must lie in [0, 1]");
        PEWindowStats { t, beta }
    }
}

/// Convergence-rate bound: `gamma = 2l - l^2`, the window contraction factor
/// `alpha_bar`, and the per-step geometric rate `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub gamma: f64,
    pub alpha_bar: f64,
    pub alpha: f64,
}

/// Attitude estimation error `E = r_hat * r_true^T`; identity means perfect
/// estimation and [`crate::so3::angle_of`] measures how far off we are.
pub fn error_rotation(r_hat: &Rotation, r_true: &Rotation) -> Rotation {
    *r_hat * r_true.inverse()
}

/// One step of the autonomous error dynamics:
/// `E_next = exp(hat((L (E u - u)) x (E u))) * E` for the NED direction `u`.
///
/// Iterating this from `error_rotation` of the initial condition reproduces
/// the error of the observer run against the true system exactly.
pub fn error_step(e: &Rotation, dir_ned: &UnitDirection, gain: &GainSpec) -> Rotation {
    let u = dir_ned.as_vector();
    let eu = e.rotate(u);
    let omega = gain.apply(&(eu - u)).cross(&eu);
    exp_so3(&omega) * *e
}

/// The rank-two projector `P = I - u u^T` onto the plane normal to the
/// motion direction: the instantaneous information matrix of the linearized
/// error. Symmetric, idempotent, eigenvalues {0, 1, 1}, null space along `u`.
pub fn projector(dir_ned: &UnitDirection) -> Matrix3<f64> {
    let u = dir_ned.as_vector();
    Matrix3::identity() - u * u.transpose()
}

/// One step of the linearized error dynamics `eps_next = eps - l P eps`,
/// valid near the identity error for scalar gain `0 < l < 2`.
pub fn linearized_step(eps: &AxisVector, dir_ned: &UnitDirection, l: f64) -> AxisVector {
    debug_assert!(l > 0.0 && l < 2.0, "scalar gain out of range: {l}");
    eps - l * (projector(dir_ned) * eps)
}

/// Both sides of the per-step Lyapunov identity for `L = eps^T eps`:
/// the decrement evaluated through the dynamics and the closed form
/// `-gamma * eps^T P eps` with `gamma = 2l - l^2`. They agree exactly up to
/// floating-point rounding; the residual is a regression check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovDecrement {
    /// `L_next - L` evaluated through `linearized_step`.
    pub actual: f64,
    /// `-gamma * eps^T P eps` from the closed form.
    pub predicted: f64,
}

impl LyapunovDecrement {
    pub fn residual(&self) -> f64 {
        (self.actual - self.predicted).abs()
    }
}

pub fn lyapunov_decrement(eps: &AxisVector, dir_ned: &UnitDirection, l: f64) -> LyapunovDecrement {
    let next = linearized_step(eps, dir_ned, l);
    let actual = next.norm_squared() - eps.norm_squared();
    let gamma = 2.0 * l - l * l;
    let predicted = -gamma * eps.dot(&(projector(dir_ned) * eps));
    LyapunovDecrement { actual, predicted }
}

/// Smallest eigenvalue of the projector average over a single window of
/// directions. The streaming building block behind [`pe_stats`], also used
/// directly for per-window gain scheduling.
pub fn window_beta(window: &[UnitDirection]) -> f64 {
    let mut acc = Matrix3::zeros();
    for dir in window {
        acc += projector(dir);
    }
    acc /= window.len() as f64;
    let lambda_min = symmetric_eigenvalues_ascending(&acc)[0];
    if lambda_min < PE_EIGENVALUE_TOL {
        0.0
    } else {
        lambda_min.min(1.0)
    }
}

/// Persistency-of-excitation statistics: `beta` is minimized over every
/// window of `t + 1` consecutive directions, so the bound holds uniformly
/// over the stream. Errors when the stream is shorter than one window.
pub fn pe_stats(dirs: &[UnitDirection], t: usize) -> Result<PEWindowStats, AnalysisError> {
    assert!(t >= 1, "window parameter must be at least 1");
    let window = t + 1;
    if dirs.len() < window {
        return Err(AnalysisError::SequenceTooShort {
            len: dirs.len(),
            window,
        });
    }
    let beta = dirs
        .windows(window)
        .map(window_beta)
        .fold(f64::INFINITY, f64::min);
    Ok(PEWindowStats { t, beta })
}

/// The convergence-rate bound for scalar gain `l` under measured PE
/// statistics:
///
/// ```text
/// gamma     = 2l - l^2
/// alpha_bar = 1 - beta (T+1) gamma / (2 + l^2 T (T+1))
/// alpha     = alpha_bar^(1 / (2 (1+T)))
/// ```
///
/// Errors when `l` is outside `(0, 2)` or when `beta = 0` (PE violated:
/// the error is then not guaranteed to contract over any window).
pub fn convergence_rate(l: f64, stats: &PEWindowStats) -> Result<RateBound, AnalysisError> {
    if !(l > 0.0 && l < 2.0) {
        return Err(AnalysisError::GainOutOfRange(l));
    }
    if stats.beta <= 0.0 {
        return Err(AnalysisError::PeViolated);
    }
    let t = stats.t as f64;
    let gamma = 2.0 * l - l * l;
    let alpha_bar = 1.0 - stats.beta * (t + 1.0) * gamma / (2.0 + l * l * t * (t + 1.0));
    let alpha = alpha_bar.powf(1.0 / (2.0 * (1.0 + t)));
    Ok(RateBound {
        gamma,
        alpha_bar,
        alpha,
    })
}

/// The scalar gain in `(0, 2)` that maximizes the convergence rate for the
/// given window statistics, found by golden-section search to 1e-9.
///
/// The objective is `f(l) = (2l - l^2) / (2 + l^2 T (T+1))`, which is
/// unimodal on `(0, 2)`; `beta` scales `f` without moving its maximizer but
/// must be positive for a rate to exist at all.
pub fn optimal_gain(stats: &PEWindowStats) -> Result<f64, AnalysisError> {
    if stats.beta <= 0.0 {
        return Err(AnalysisError::PeViolated);
    }
    let a_coef = (stats.t * (stats.t + 1)) as f64;
    let f = |l: f64| (2.0 * l - l * l) / (2.0 + l * l * a_coef);

    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0_f64, 2.0_f64);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-9 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Ok(0.5 * (a + b))
}

/// Eigenvalues of a symmetric 3x3 matrix in ascending order.
///
/// Trigonometric solution of the characteristic polynomial with a Newton
/// polish on each root when the residual warrants it; accurate to ~1e-10 for
/// matrices with entries of order one.
pub fn symmetric_eigenvalues_ascending(m: &Matrix3<f64>) -> [f64; 3] {
    let p1 = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
    if p1 == 0.0 {
        let mut diag = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
        diag.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
        return diag;
    }
    let q = m.trace() / 3.0;
    let p2 = (m[(0, 0)] - q).powi(2) + (m[(1, 1)] - q).powi(2) + (m[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (m - Matrix3::from_diagonal_element(q)) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let mid = 3.0 * q - hi - lo;
    let mut eig = [lo, mid, hi];
    for lambda in &mut eig {
        *lambda = polish_eigenvalue(m, *lambda);
    }
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eig
}

/// One or two Newton steps on the characteristic polynomial, skipped near
/// repeated roots where the derivative degenerates.
fn polish_eigenvalue(m: &Matrix3<f64>, lambda0: f64) -> f64 {
    let tr = m.trace();
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)].powi(2)
        + m[(0, 0)] * m[(2, 2)] - m[(0, 2)].powi(2)
        + m[(1, 1)] * m[(2, 2)] - m[(1, 2)].powi(2);
    let det = m.determinant();
    let p = |x: f64| -x.powi(3) + tr * x.powi(2) - minors * x + det;
    let dp = |x: f64| -3.0 * x.powi(2) + 2.0 * tr * x - minors;
    let scale = m.norm().max(1.0);
    let mut lambda = lambda0;
    for _ in 0..2 {
        let d = dp(lambda);
        if d.abs() < 1e-8 * scale * scale {
            break;
        }
        lambda -= p(lambda) / d;
    }
    lambda
}
