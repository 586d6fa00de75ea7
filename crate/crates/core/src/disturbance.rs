//! Internal-model disturbance observer for biased, harmonic velocity noise.
//!
//! The disturbance `w` is modelled as the output of an autonomous linear
//! system `ẋ_d = A_d x_d`, `w = C_d x_d` with skew-symmetric `A_d`. Its
//! state is estimated by `x̂̇_d = A_d x̂_d + ρ C_dᵀ ē`, where `ē` is the
//! gradient innovation transported by the current estimate.

use nalgebra::{DMatrix, DVector, Vector6};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::se3::{Se3, Se3Basis};

/// Exosystem `(A_d, C_d)` shared by all six velocity channels.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalModel<T: Scalar> {
    a_d: DMatrix<T>,
    c_d: DMatrix<T>,
    freqs: Vec<T>,
    has_bias: bool,
}

pub const CHANNELS: usize = 6;

impl<T: Scalar> InternalModel<T> {
    /// Per channel: a zero 1×1 block when `include_bias`, then for each
    /// frequency `ω` the generator `[[0, ω], [−ω, 0]]` read out through
    /// `[1/ω, 0]`. One bias plus one harmonic at `ω` gives
    /// `A_i = [[0,0,0],[0,0,ω],[0,−ω,0]]`, `C_i = [1, 1/ω, 0]`.
    pub fn new(freqs: &[T], include_bias: bool) -> Result<Self> {
        for (i, f) in freqs.iter().enumerate() {
            if !(*f > T::zero()) || !f.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "disturbance frequency {f} must be positive"
                )));
            }
            if freqs[..i].iter().any(|g| g == f) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate disturbance frequency {f}"
                )));
            }
        }
        let per = usize::from(include_bias) + 2 * freqs.len();
        if per == 0 {
            return Err(Error::InvalidArgument(
                "internal model needs a bias term or at least one frequency".into(),
            ));
        }
        let n_d = per * CHANNELS;
        let mut a_d = DMatrix::zeros(n_d, n_d);
        let mut c_d = DMatrix::zeros(CHANNELS, n_d);
        for ch in 0..CHANNELS {
            let mut k = ch * per;
            if include_bias {
                c_d[(ch, k)] = T::one();
                k += 1;
            }
            for f in freqs {
                a_d[(k, k + 1)] = *f;
                a_d[(k + 1, k)] = -*f;
                c_d[(ch, k)] = T::one() / *f;
                k += 2;
            }
        }
        let sv = c_d.clone().singular_values();
        if sv.min() <= T::lit(1e-10) {
            return Err(Error::InvalidArgument("C_d is rank deficient".into()));
        }
        Ok(Self {
            a_d,
            c_d,
            freqs: freqs.to_vec(),
            has_bias: include_bias,
        })
    }

    pub fn a_d(&self) -> &DMatrix<T> {
        &self.a_d
    }

    pub fn c_d(&self) -> &DMatrix<T> {
        &self.c_d
    }

    pub fn freqs(&self) -> &[T] {
        &self.freqs
    }

    pub fn has_bias(&self) -> bool {
        self.has_bias
    }

    pub fn n_states(&self) -> usize {
        self.a_d.nrows()
    }

    pub fn output(&self, x: &DVector<T>) -> Vector6<T> {
        Vector6::from_iterator((&self.c_d * x).iter().copied())
    }
}

/// Running disturbance estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceState<T: Scalar> {
    x_hat: DVector<T>,
    w_hat: Vector6<T>,
}

impl<T: Scalar> DisturbanceState<T> {
    pub fn zero(model: &InternalModel<T>) -> Self {
        Self {
            x_hat: DVector::zeros(model.n_states()),
            w_hat: Vector6::zeros(),
        }
    }

    pub fn from_state(model: &InternalModel<T>, x_hat: DVector<T>) -> Result<Self> {
        if x_hat.len() != model.n_states() {
            return Err(Error::Dimension {
                expected: model.n_states(),
                got: x_hat.len(),
            });
        }
        let w_hat = model.output(&x_hat);
        Ok(Self { x_hat, w_hat })
    }

    pub fn x_hat(&self) -> &DVector<T> {
        &self.x_hat
    }

    /// `ŵ = C_d x̂_d`.
    pub fn w_hat(&self) -> &Vector6<T> {
        &self.w_hat
    }

    /// One RK4 step of `x̂̇_d = A_d x̂_d + ρ C_dᵀ ē` with `ē` held over `dt`.
    pub fn step(&mut self, model: &InternalModel<T>, ebar: &Vector6<T>, rho: T, dt: T) {
        let ebar = DVector::from_column_slice(ebar.as_slice());
        let forced = model.c_d.tr_mul(&ebar) * rho;
        let f = |x: &DVector<T>| &model.a_d * x + &forced;
        let half = dt * T::lit(0.5);
        let k1 = f(&self.x_hat);
        let k2 = f(&(&self.x_hat + &k1 * half));
        let k3 = f(&(&self.x_hat + &k2 * half));
        let k4 = f(&(&self.x_hat + &k3 * dt));
        self.x_hat += (k1 + k2 * T::lit(2.0) + k3 * T::lit(2.0) + k4) * (dt / T::lit(6.0));
        self.w_hat = model.output(&self.x_hat);
    }
}

/// How the gradient coordinates are transported into the disturbance update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EbarMode {
    /// `S(ē) = Ad*_X̂(S(e))`, i.e. `ē = Ad_X̂ᵀ e`.
    #[default]
    AdjointStar,
    /// `S(ē) = X̂ S(e) X̂⁻¹`, i.e. `ē = Ad_X̂ e`. Agrees with `AdjointStar`
    /// only while the estimated attitude stays small; large attitudes can
    /// destabilize the adaptation.
    Conjugation,
}

pub fn ebar_coords<T: Scalar>(
    estimate: &Se3<T>,
    basis: &Se3Basis<T>,
    e: &Vector6<T>,
    mode: EbarMode,
) -> Vector6<T> {
    match mode {
        EbarMode::AdjointStar => crate::se3::adjoint_star_coords(estimate, basis, e),
        EbarMode::Conjugation => {
            basis.coefficients(&(estimate.matrix() * basis.hat(e) * estimate.inverse().matrix()))
        }
    }
}
