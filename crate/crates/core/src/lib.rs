//! Higher-order nonlinear complementary filtering on matrix Lie groups.
//!
//! The observer propagates a group-valued estimate with the measured group
//! velocity and corrects it with an innovation obtained by passing the
//! gradient of a right-invariant cost, expressed in an orthonormal algebra
//! basis, through a linear time-invariant filter. With a strictly positive
//! real filter (plus nonnegative feedthrough) the estimate converges locally;
//! higher-order filters let the sensitivity/complementary-sensitivity pair
//! be shaped, e.g. with a notch. An internal-model disturbance observer
//! rejects constant and harmonic velocity disturbances.
//!
//! SE(3) pose estimation from three landmark observations is the concrete
//! instance. The numeric core is generic over [`Scalar`] (`f32`/`f64`);
//! the aliases below fix it to `f64`, which is what the simulator uses.

pub mod disturbance;
pub mod error;
pub mod lie;
pub mod lti;
pub mod observer;
pub mod scalar;
pub mod se3;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision pose.
pub type Pose = se3::Se3<f64>;
/// Double-precision 𝔰𝔢(3) coordinates.
pub type AlgebraCoords = nalgebra::Vector6<f64>;
/// Double-precision 𝔰𝔢(3) matrix.
pub type AlgebraElement = nalgebra::Matrix4<f64>;
pub type Se3Basis = se3::Se3Basis<f64>;
pub type LandmarkSet = se3::LandmarkSet<f64>;
pub type TransferFunction = lti::TransferFunction<f64>;
pub type StateSpace = lti::StateSpace<f64>;
pub type InternalModel = disturbance::InternalModel<f64>;
pub type ObserverState = observer::ObserverState<f64>;
pub type ObserverConfig = observer::ObserverConfig<f64>;
