//! The complementary filter on SE(3).
//!
//! Continuous-time form:
//!
//! ```text
//! X̂' = X̂ (v_y − ŵ) − S(u) X̂
//! x_f' = A_f x_f + B_f e,   u = C_f x_f + D_f e
//! ```
//!
//! where `e` are the gradient coordinates of the landmark cost. Each step
//! evaluates `e` at the current estimate, advances the filter (and the
//! disturbance observer, when present) and then moves the estimate. The
//! default integrator composes the two exponential factors,
//! `X̂⁺ = exp(−dt·S(u)) · X̂ · exp(dt·(v_y − S(ŵ)))`, which stays on the
//! group exactly.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4, Vector6};

use crate::disturbance::{ebar_coords, DisturbanceState, EbarMode, InternalModel};
use crate::error::{Error, Result};
use crate::lti::{mimo_lift, tf_to_ss, StateSpace, TransferFunction};
use crate::scalar::Scalar;
use crate::se3::{self, se3_exp, LandmarkSet, Se3, Se3Basis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// `exp(−dt·u) · X̂ · exp(dt·(v_y − ŵ))`.
    #[default]
    LieSplitting,
    /// Classical RK4 on the matrix ODE, then the rotation block is
    /// projected back onto SO(3).
    Rk4Project,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverConfig<T: Scalar> {
    pub integrator: Integrator,
    pub dt: T,
    pub ebar_mode: EbarMode,
    /// Disturbance adaptation gain ρ.
    pub rho: T,
}

impl<T: Scalar> ObserverConfig<T> {
    pub fn new(dt: T) -> Result<Self> {
        let cfg = Self {
            integrator: Integrator::default(),
            dt,
            ebar_mode: EbarMode::default(),
            rho: T::lit(0.5),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.rho >= T::zero()) {
            return Err(Error::InvalidArgument(format!("rho must be nonnegative, got {}", self.rho)));
        }
        Ok(())
    }
}

/// Sensor data sampled at time `t`: landmark outputs `y_j` and the measured
/// group velocity (a raw 𝔰𝔢(3) matrix), held over the following step.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement<T: Scalar> {
    pub t: T,
    pub outputs: Vec<Vector4<T>>,
    pub velocity: Matrix4<T>,
}

/// Internal model together with its running estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceEstimator<T: Scalar> {
    pub model: InternalModel<T>,
    pub state: DisturbanceState<T>,
}

impl<T: Scalar> DisturbanceEstimator<T> {
    /// Starts from `x̂_d = 0`.
    pub fn new(model: InternalModel<T>) -> Self {
        let state = DisturbanceState::zero(&model);
        Self { model, state }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState<T: Scalar> {
    pub estimate: Se3<T>,
    pub filter: StateSpace<T>,
    pub disturbance: Option<DisturbanceEstimator<T>>,
    pub t: T,
}

/// Quantities computed during the last step, kept for logging.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics<T: Scalar> {
    pub e: Vector6<T>,
    pub u: Vector6<T>,
    pub ebar: Vector6<T>,
}

/// Landmark-based pose observer.
#[derive(Debug, Clone)]
pub struct Observer<T: Scalar> {
    pub state: ObserverState<T>,
    pub config: ObserverConfig<T>,
    refs: LandmarkSet<T>,
    basis: Se3Basis<T>,
    last: StepDiagnostics<T>,
}

impl<T: Scalar> Observer<T> {
    /// `filter` must map 6 gradient coordinates to 6 innovation coordinates.
    pub fn new(
        estimate: Se3<T>,
        filter: StateSpace<T>,
        disturbance: Option<DisturbanceEstimator<T>>,
        refs: LandmarkSet<T>,
        config: ObserverConfig<T>,
    ) -> Result<Self> {
        config.validate()?;
        for got in [filter.n_inputs(), filter.n_outputs()] {
            if got != 6 {
                return Err(Error::Dimension { expected: 6, got });
            }
        }
        Ok(Self {
            state: ObserverState {
                estimate,
                filter,
                disturbance,
                t: T::zero(),
            },
            config,
            refs,
            basis: se3::se3_basis(),
            last: StepDiagnostics::default(),
        })
    }

    pub fn landmarks(&self) -> &LandmarkSet<T> {
        &self.refs
    }

    pub fn basis(&self) -> &Se3Basis<T> {
        &self.basis
    }

    pub fn last(&self) -> &StepDiagnostics<T> {
        &self.last
    }

    /// Current disturbance estimate `ŵ` (zero without a disturbance observer).
    pub fn w_hat(&self) -> Vector6<T> {
        self.state
            .disturbance
            .as_ref()
            .map(|d| *d.state.w_hat())
            .unwrap_or_else(Vector6::zeros)
    }

    /// Advances the observer from `meas.t` to `meas.t + dt`.
    pub fn step(&mut self, meas: &Measurement<T>) -> Result<()> {
        let dt = self.config.dt;
        let st = &mut self.state;
        if (meas.t - st.t).abs() > T::lit(1e-9) {
            return Err(Error::InvalidArgument(format!(
                "measurement at t = {} does not match observer time {}",
                meas.t, st.t
            )));
        }
        if meas.outputs.len() != self.refs.len() {
            return Err(Error::Dimension {
                expected: self.refs.len(),
                got: meas.outputs.len(),
            });
        }

        let e = se3::gradient_coords(&st.estimate, &meas.outputs, &self.refs, &self.basis);
        let u_dyn = st.filter.step(&DVector::from_column_slice(e.as_slice()), dt);
        let u = Vector6::from_column_slice(u_dyn.as_slice());

        let mut ebar = Vector6::zeros();
        let mut w_hat = Vector6::zeros();
        if let Some(dist) = st.disturbance.as_mut() {
            ebar = ebar_coords(&st.estimate, &self.basis, &e, self.config.ebar_mode);
            dist.state.step(&dist.model, &ebar, self.config.rho, dt);
            w_hat = *dist.state.w_hat();
        }

        let right = meas.velocity - self.basis.hat(&w_hat);
        let left = self.basis.hat(&u);
        let next = match self.config.integrator {
            Integrator::LieSplitting => {
                se3_exp(&(-left * dt)) * st.estimate * se3_exp(&(right * dt))
            }
            Integrator::Rk4Project => rk4_project(&st.estimate, &left, &right, dt),
        };

        st.t = meas.t + dt;
        let defect = next.orthogonality_defect();
        if !(defect <= T::lit(T::MANIFOLD_TOL)) || !next.matrix().iter().all(|v| v.is_finite()) {
            return Err(Error::Integration {
                t: st.t.as_f64(),
                defect: defect.as_f64(),
            });
        }
        st.estimate = next;
        self.last = StepDiagnostics { e, u, ebar };
        Ok(())
    }
}

fn rk4_project<T: Scalar>(x: &Se3<T>, left: &Matrix4<T>, right: &Matrix4<T>, dt: T) -> Se3<T> {
    let f = |m: &Matrix4<T>| m * right - left * m;
    let m0 = *x.matrix();
    let half = dt * T::lit(0.5);
    let k1 = f(&m0);
    let k2 = f(&(m0 + k1 * half));
    let k3 = f(&(m0 + k2 * half));
    let k4 = f(&(m0 + k3 * dt));
    let m = m0 + (k1 + k2 * T::lit(2.0) + k3 * T::lit(2.0) + k4) * (dt / T::lit(6.0));
    se3::polar_project(&m)
}

/// Group error `X̃ = X̂ X⁻¹`.
pub fn group_error<T: Scalar>(estimate: &Se3<T>, truth: &Se3<T>) -> Se3<T> {
    estimate * &truth.inverse()
}

/// `V₁ = f(X̃, I) + ½ x_fᵀ P_f x_f`, the Lyapunov function of the noise-free
/// error dynamics when `P_f` is a KYP certificate of the filter.
pub fn lyapunov_v1<T: Scalar>(
    estimate: &Se3<T>,
    truth: &Se3<T>,
    filter_state: &DVector<T>,
    p_f: &DMatrix<T>,
    refs: &LandmarkSet<T>,
) -> Result<T> {
    let n = filter_state.len();
    if p_f.shape() != (n, n) {
        return Err(Error::Dimension {
            expected: n,
            got: p_f.nrows(),
        });
    }
    if n > 0 {
        let asym = (p_f - p_f.transpose()).norm();
        let min = p_f.clone().symmetric_eigenvalues().min();
        if asym > T::lit(1e-9) * (T::one() + p_f.norm()) || !(min > T::zero()) {
            return Err(Error::InvalidArgument("P_f must be symmetric positive definite".into()));
        }
    }
    let err = group_error(estimate, truth);
    let f = se3::cost(&err, refs.refs(), refs);
    Ok(f + (filter_state.transpose() * p_f * filter_state)[(0, 0)] * T::lit(0.5))
}

/// The filter used by the SE(3) observer: `H(s)·M₁⁻¹` on six channels.
pub fn landmark_filter<T: Scalar>(tf: &TransferFunction<T>, m1: &DMatrix<T>) -> Result<StateSpace<T>> {
    mimo_lift(&tf_to_ss(tf), m1)
}
