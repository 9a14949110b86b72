//! Attitude estimation on SO(3) from monocular visual odometry and GPS velocity.
//!
//! A visual-odometry front end supplies relative camera transforms whose
//! translations are only known up to an unknown scale; a GPS receiver supplies
//! velocity in the North-East-Down frame. Normalizing both translations turns
//! the pair into a single vectorial measurement of the camera attitude, and a
//! discrete-time gradient observer on SO(3) fuses the streams into a drift-free
//! NED attitude estimate.
//!
//! Modules:
//! - [`so3`]: rotation-group arithmetic (exp/log, metrics, sampling, Euler).
//! - [`measurement`]: raw VO/GPS samples to normalized direction pairs.
//! - [`observer`]: the gradient observer, single-stage and predict/update form.
//! - [`analysis`]: error dynamics, linearization, Lyapunov decrement,
//!   persistency-of-excitation statistics and the convergence-rate bound.
//! - [`sim`]: circular-trajectory ground truth, synthetic measurements and the
//!   Monte Carlo harness.

pub mod analysis;
pub mod measurement;
pub mod observer;
pub mod sim;
pub mod so3;

pub use analysis::{PEWindowStats, RateBound};
pub use measurement::{MeasurementFrame, RelativeTransform, ScaleModel, VelocityMode, VelocitySample};
pub use observer::{GainSpec, ObserverState};
pub use sim::{NoiseSpec, SimConfig, TrajectorySample};
pub use so3::{AxisVector, EulerAngles, Rotation, UnitDirection};
