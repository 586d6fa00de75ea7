//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point scalar the observer machinery is generic over (`f32` or `f64`).
///
/// The associated tolerances are the acceptance thresholds used by the
/// runtime contract checks; they are tighter for `f64`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync
{
    /// Round-off budget for identities that hold exactly in real arithmetic.
    const EXACT_TOL: f64;
    /// Frobenius distance from the algebra above which `vee` rejects its input.
    const VEE_TOL: f64;
    /// Allowed departure of `RᵀR` from the identity before a step is rejected.
    const MANIFOLD_TOL: f64;
    /// Rotation angle below which exp/log switch to their series forms.
    const SMALL_ANGLE: f64;
    /// Distance from π at which the logarithm is declared ambiguous.
    const PI_MARGIN: f64;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f64 {
    const EXACT_TOL: f64 = 1e-12;
    const VEE_TOL: f64 = 1e-6;
    const MANIFOLD_TOL: f64 = 1e-6;
    const SMALL_ANGLE: f64 = 1e-6;
    const PI_MARGIN: f64 = 1e-6;
}

impl Scalar for f32 {
    const EXACT_TOL: f64 = 1e-5;
    const VEE_TOL: f64 = 1e-3;
    const MANIFOLD_TOL: f64 = 1e-3;
    const SMALL_ANGLE: f64 = 1e-3;
    const PI_MARGIN: f64 = 1e-3;
}
