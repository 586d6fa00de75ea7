//! Rigid-body poses on SE(3): group operations, the landmark measurement
//! model, the right-invariant landmark cost and its gradient.
//!
//! Algebra coordinates use the orthonormal basis
//!
//! ```text
//! B_i = [[e_i^× / √2, 0], [0, 0]]   i = 1..3
//! B_i = [[0, e_{i-3}],    [0, 0]]   i = 4..6
//! ```
//!
//! so a physical twist `(ω, v)` has coordinates `(√2·ω, v)`. Use
//! [`coords_from_twist`] / [`twist_from_coords`] to cross that boundary.

use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector4, Vector6};

use crate::error::{Error, Result};
use crate::lie::{self, BasisSet};
use crate::scalar::Scalar;

pub type Se3Basis<T> = BasisSet<T, 4, 6>;

/// The orthonormal 𝔰𝔢(3) basis used throughout the crate.
pub fn se3_basis<T: Scalar>() -> Se3Basis<T> {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let mut el = [Matrix4::<T>::zeros(); 6];
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = T::one();
        el[i].fixed_view_mut::<3, 3>(0, 0).copy_from(&(skew(&e) * s));
        el[i + 3][(i, 3)] = T::one();
    }
    BasisSet::new(el).expect("se(3) basis is orthonormal by construction")
}

/// `ω^×`.
pub fn skew<T: Scalar>(w: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -w[2],
        w[1],
        w[2],
        T::zero(),
        -w[0],
        -w[1],
        w[0],
        T::zero(),
    )
}

fn unskew<T: Scalar>(m: &Matrix3<T>) -> Vector3<T> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Block form of the projection onto 𝔰𝔢(3): `[[A,b],[cᵀ,d]] ↦ [[(A−Aᵀ)/2, b],[0,0]]`.
pub fn project_block<T: Scalar>(m: &Matrix4<T>) -> Matrix4<T> {
    let a = m.fixed_view::<3, 3>(0, 0);
    let mut out = Matrix4::zeros();
    out.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&((a - a.transpose()) * T::lit(0.5)));
    out.fixed_view_mut::<3, 1>(0, 3)
        .copy_from(&m.fixed_view::<3, 1>(0, 3));
    out
}

/// Algebra coordinates of the physical twist `(ω, v)`.
pub fn coords_from_twist<T: Scalar>(omega: &Vector3<T>, v: &Vector3<T>) -> Vector6<T> {
    let r2 = T::lit(std::f64::consts::SQRT_2);
    Vector6::new(omega[0] * r2, omega[1] * r2, omega[2] * r2, v[0], v[1], v[2])
}

/// Physical twist `(ω, v)` of algebra coordinates.
pub fn twist_from_coords<T: Scalar>(a: &Vector6<T>) -> (Vector3<T>, Vector3<T>) {
    let s = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    (
        Vector3::new(a[0] * s, a[1] * s, a[2] * s),
        Vector3::new(a[3], a[4], a[5]),
    )
}

/// Raw algebra element `[[ω^×, v],[0,0]]`.
pub fn algebra_from_twist<T: Scalar>(omega: &Vector3<T>, v: &Vector3<T>) -> Matrix4<T> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(omega));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(v);
    m
}

/// Pose `(R, r)` stored as a homogeneous 4×4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Se3<T: Scalar> {
    m: Matrix4<T>,
}

impl<T: Scalar> Se3<T> {
    pub fn identity() -> Self {
        Self {
            m: Matrix4::identity(),
        }
    }

    /// Assembles a pose; `rot` must be a rotation to within `MANIFOLD_TOL`.
    pub fn from_parts(rot: &Matrix3<T>, r: &Vector3<T>) -> Result<Self> {
        let pose = Self::from_parts_unchecked(rot, r);
        pose.check()?;
        Ok(pose)
    }

    pub fn from_translation(r: &Vector3<T>) -> Self {
        Self::from_parts_unchecked(&Matrix3::identity(), r)
    }

    /// Validates a homogeneous matrix: orthonormal rotation block with
    /// positive determinant and last row exactly `[0 0 0 1]`.
    pub fn from_matrix(m: Matrix4<T>) -> Result<Self> {
        let last = [T::zero(), T::zero(), T::zero(), T::one()];
        if (0..4).any(|j| m[(3, j)] != last[j]) {
            return Err(Error::InvalidArgument(
                "last row of a pose must be exactly [0 0 0 1]".into(),
            ));
        }
        let pose = Self { m };
        pose.check()?;
        Ok(pose)
    }

    fn from_parts_unchecked(rot: &Matrix3<T>, r: &Vector3<T>) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(rot);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(r);
        Self { m }
    }

    fn check(&self) -> Result<()> {
        let defect = self.orthogonality_defect();
        let det = self.rotation().determinant();
        if defect > T::lit(T::MANIFOLD_TOL) || (det - T::one()).abs() > T::lit(T::MANIFOLD_TOL) {
            return Err(Error::InvalidArgument(format!(
                "not a rotation: |RᵀR − I| = {defect}, det = {det}"
            )));
        }
        Ok(())
    }

    /// `‖RᵀR − I‖_F`.
    pub fn orthogonality_defect(&self) -> T {
        let r = self.rotation();
        (r.tr_mul(&r) - Matrix3::identity()).norm()
    }

    pub fn matrix(&self) -> &Matrix4<T> {
        &self.m
    }

    pub fn rotation(&self) -> Matrix3<T> {
        self.m.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<T> {
        self.m.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation().transpose();
        Self::from_parts_unchecked(&rt, &(-(rt * self.translation())))
    }

    /// `X p` for a homogeneous point `p`.
    pub fn act(&self, p: &Vector4<T>) -> Vector4<T> {
        self.m * p
    }

    /// Projects the rotation block back onto SO(3).
    pub fn reorthonormalized(&self) -> Self {
        polar_project(&self.m)
    }

    /// Matrix of `Ad_X` in the orthonormal basis coordinates.
    pub fn adjoint(&self, basis: &Se3Basis<T>) -> Matrix6<T> {
        basis.adjoint_matrix(&self.m, self.inverse().matrix())
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn rotation_angle(&self) -> T {
        let r = self.rotation();
        let c = (r.trace() - T::one()) * T::lit(0.5);
        let s = unskew(&(r - r.transpose())).norm() * T::lit(0.5);
        s.atan2(c)
    }
}

impl<T: Scalar> Default for Se3<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Scalar> Mul for Se3<T> {
    type Output = Se3<T>;
    fn mul(self, rhs: Se3<T>) -> Se3<T> {
        Se3 { m: self.m * rhs.m }
    }
}

impl<'a, T: Scalar> Mul<&'a Se3<T>> for &'a Se3<T> {
    type Output = Se3<T>;
    fn mul(self, rhs: &Se3<T>) -> Se3<T> {
        Se3 { m: self.m * rhs.m }
    }
}

/// Pose nearest to a homogeneous matrix whose rotation block has drifted:
/// the rotation is replaced by its orthogonal polar factor (via SVD) and the
/// last row is reset.
pub fn polar_project<T: Scalar>(m: &Matrix4<T>) -> Se3<T> {
    let svd = m.fixed_view::<3, 3>(0, 0).into_owned().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut rot = u * vt;
    if rot.determinant() < T::zero() {
        let mut d = Matrix3::identity();
        d[(2, 2)] = -T::one();
        rot = u * d * vt;
    }
    Se3::from_parts_unchecked(&rot, &m.fixed_view::<3, 1>(0, 3).into_owned())
}

// Angle below which the (θ − sin θ)/θ³-type coefficients lose accuracy to
// cancellation and their Taylor series takes over.
fn series_angle<T: Scalar>() -> T {
    T::default_epsilon().powf(T::lit(0.125))
}

/// Coefficients of `R = I + a·Ω + b·Ω²` and `V = I + b·Ω + c·Ω²`.
fn exp_coefficients<T: Scalar>(theta: T) -> (T, T, T) {
    let t2 = theta * theta;
    let a = if theta < T::lit(T::SMALL_ANGLE) {
        T::one() - t2 / T::lit(6.0)
    } else {
        theta.sin() / theta
    };
    let b = if theta < T::lit(T::SMALL_ANGLE) {
        T::lit(0.5) - t2 / T::lit(24.0)
    } else {
        let h = (theta * T::lit(0.5)).sin() / theta;
        h * h * T::lit(2.0)
    };
    let c = if theta < series_angle::<T>() {
        T::one() / T::lit(6.0) - t2 / T::lit(120.0) + t2 * t2 / T::lit(5040.0)
            - t2 * t2 * t2 / T::lit(362880.0)
    } else {
        (theta - theta.sin()) / (t2 * theta)
    };
    (a, b, c)
}

/// Matrix exponential of an 𝔰𝔢(3) element in closed form.
///
/// The argument is read through its skew/translation blocks; anything
/// outside 𝔰𝔢(3) is ignored.
pub fn se3_exp<T: Scalar>(m: &Matrix4<T>) -> Se3<T> {
    let omega = unskew(&m.fixed_view::<3, 3>(0, 0).into_owned());
    let v: Vector3<T> = m.fixed_view::<3, 1>(0, 3).into_owned();
    let theta = omega.norm();
    let w = skew(&omega);
    let w2 = w * w;
    let (a, b, c) = exp_coefficients(theta);
    let rot = Matrix3::identity() + w * a + w2 * b;
    let jac = Matrix3::identity() + w * b + w2 * c;
    Se3::from_parts_unchecked(&rot, &(jac * v))
}

/// `exp(S(a))` for basis coordinates `a`.
pub fn exp_coords<T: Scalar>(basis: &Se3Basis<T>, a: &Vector6<T>) -> Se3<T> {
    se3_exp(&basis.hat(a))
}

/// Principal logarithm, defined for rotation angles strictly below π.
pub fn se3_log<T: Scalar>(pose: &Se3<T>) -> Result<Matrix4<T>> {
    let rot = pose.rotation();
    let theta = pose.rotation_angle();
    let pi = T::pi();
    if theta > pi - T::lit(T::PI_MARGIN) {
        return Err(Error::BranchAmbiguity {
            angle: theta.as_f64(),
        });
    }
    let sin_vec = unskew(&(rot - rot.transpose())) * T::lit(0.5);
    let omega = if theta < T::lit(T::SMALL_ANGLE) {
        sin_vec * (T::one() + theta * theta / T::lit(6.0))
    } else if theta < T::lit(3.0) {
        sin_vec * (theta / theta.sin())
    } else {
        // sin θ is small here; recover the axis from the symmetric part
        // (R + Rᵀ)/2 − cos θ·I = (1 − cos θ)·k kᵀ.
        let cos = theta.cos();
        let sym = (rot + rot.transpose()) * T::lit(0.5) - Matrix3::identity() * cos;
        let mut best = 0;
        for i in 1..3 {
            if sym[(i, i)] > sym[(best, best)] {
                best = i;
            }
        }
        let mut axis: Vector3<T> = sym.column(best).into_owned();
        axis /= axis.norm();
        if axis.dot(&sin_vec) < T::zero() {
            axis = -axis;
        }
        axis * theta
    };
    let w = skew(&omega);
    let t2 = theta * theta;
    // V⁻¹ = I − Ω/2 + d·Ω²
    let d = if theta < series_angle::<T>() {
        T::one() / T::lit(12.0) + t2 / T::lit(720.0) + t2 * t2 / T::lit(30240.0)
    } else {
        let half = theta * T::lit(0.5);
        (T::one() - half * half.cos() / half.sin()) / t2
    };
    let vinv = Matrix3::identity() - w * T::lit(0.5) + w * w * d;
    Ok(algebra_from_twist(&omega, &(vinv * pose.translation())))
}

/// Reference landmarks `ȳ_j` as homogeneous points (fourth component 1).
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet<T: Scalar> {
    refs: Vec<Vector4<T>>,
}

impl<T: Scalar> LandmarkSet<T> {
    /// Requires at least three points spanning 3-D affine space, which is
    /// what makes the landmark cost an error function.
    pub fn new(points: &[Vector3<T>]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::DegenerateLandmarks(format!(
                "need at least 3 landmarks, got {}",
                points.len()
            )));
        }
        // rank of [ȳ_1 … ȳ_ℓ] in homogeneous form must be 4
        let stacked = nalgebra::DMatrix::<T>::from_fn(4, points.len(), |i, j| {
            if i < 3 {
                points[j][i]
            } else {
                T::one()
            }
        });
        let sv = stacked.singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if smin <= smax * T::lit(1e-10) {
            return Err(Error::DegenerateLandmarks(format!(
                "landmarks are affinely dependent (singular values {:?})",
                sv.as_slice().iter().map(|s| s.as_f64()).collect::<Vec<_>>()
            )));
        }
        let refs = points
            .iter()
            .map(|p| Vector4::new(p[0], p[1], p[2], T::one()))
            .collect();
        Ok(Self { refs })
    }

    /// `[1 0 0 1]ᵀ, [0 1 0 1]ᵀ, [0 0 1 1]ᵀ`.
    pub fn unit_axes() -> Self {
        Self::new(&[Vector3::x(), Vector3::y(), Vector3::z()]).expect("unit axes are independent")
    }

    pub fn refs(&self) -> &[Vector4<T>] {
        &self.refs
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }
}

/// Landmark observations `y_j = T⁻¹ N_j⁻¹ ȳ_j` with `N_j = exp(S(n_j))`.
pub fn measure<T: Scalar>(
    pose: &Se3<T>,
    refs: &LandmarkSet<T>,
    basis: &Se3Basis<T>,
    noise: &[Vector6<T>],
) -> Result<Vec<Vector4<T>>> {
    if noise.len() != refs.len() {
        return Err(Error::Dimension {
            expected: refs.len(),
            got: noise.len(),
        });
    }
    let inv = pose.inverse();
    Ok(refs
        .refs()
        .iter()
        .zip(noise)
        .map(|(y, n)| {
            let nj_inv = exp_coords(basis, &(-n));
            let mut p = inv.act(&nj_inv.act(y));
            p[3] = T::one();
            p
        })
        .collect())
}

/// `f = ½ Σ ‖T̂⁻¹ȳ_j − y_j‖²`.
pub fn cost<T: Scalar>(estimate: &Se3<T>, outputs: &[Vector4<T>], refs: &LandmarkSet<T>) -> T {
    let inv = estimate.inverse();
    refs.refs()
        .iter()
        .zip(outputs)
        .map(|(yb, y)| (inv.act(yb) - y).norm_squared())
        .fold(T::zero(), |acc, x| acc + x)
        * T::lit(0.5)
}

/// Gradient of [`cost`] in basis coordinates, `∇f = S(e)·T̂`:
///
/// `e = vee(−P(Σ T̂⁻ᵀ (T̂⁻¹ȳ_j − y_j) ȳ_jᵀ))`.
///
/// Only the measurements `y_j` are consumed, never the true pose.
pub fn gradient_coords<T: Scalar>(
    estimate: &Se3<T>,
    outputs: &[Vector4<T>],
    refs: &LandmarkSet<T>,
    basis: &Se3Basis<T>,
) -> Vector6<T> {
    basis.coefficients(&(-landmark_moment(estimate, outputs, refs)))
}

fn landmark_moment<T: Scalar>(
    estimate: &Se3<T>,
    outputs: &[Vector4<T>],
    refs: &LandmarkSet<T>,
) -> Matrix4<T> {
    let inv = estimate.inverse();
    let inv_t = inv.matrix().transpose();
    let mut acc = Matrix4::zeros();
    for (yb, y) in refs.refs().iter().zip(outputs) {
        let resid = inv.act(yb) - y;
        acc += inv_t * resid * yb.transpose();
    }
    acc
}

/// The gradient vector field `∇f ∈ T_T̂ SE(3)` as a matrix, computed with the
/// block projection rather than basis coordinates.
pub fn gradient_matrix<T: Scalar>(
    estimate: &Se3<T>,
    outputs: &[Vector4<T>],
    refs: &LandmarkSet<T>,
) -> Matrix4<T> {
    -project_block(&landmark_moment(estimate, outputs, refs)) * estimate.matrix()
}

/// Noise-free outputs `T⁻¹ȳ_j`.
pub fn exact_outputs<T: Scalar>(pose: &Se3<T>, refs: &LandmarkSet<T>) -> Vec<Vector4<T>> {
    let inv = pose.inverse();
    refs.refs().iter().map(|y| inv.act(y)).collect()
}

/// Central-difference Jacobian of `e(exp(S(x)))` at `x = 0` with step `h`.
pub fn m1_with_step<T: Scalar>(refs: &LandmarkSet<T>, basis: &Se3Basis<T>, h: T) -> Matrix6<T> {
    let outputs = exact_outputs(&Se3::identity(), refs);
    let mut m = Matrix6::zeros();
    for i in 0..6 {
        let mut dx = Vector6::zeros();
        dx[i] = h;
        let ep = gradient_coords(&exp_coords(basis, &dx), &outputs, refs, basis);
        let em = gradient_coords(&exp_coords(basis, &(-dx)), &outputs, refs, basis);
        m.set_column(i, &((ep - em) / (h + h)));
    }
    (m + m.transpose()) * T::lit(0.5)
}

/// Linearization `e ≈ M1·δx` of the gradient coordinates about the
/// identity error, computed by central differences (h = 1e-5) and
/// symmetrized. Fails unless the result is positive definite.
pub fn linearize_m1<T: Scalar>(refs: &LandmarkSet<T>, basis: &Se3Basis<T>) -> Result<Matrix6<T>> {
    let m = m1_with_step(refs, basis, T::lit(1e-5));
    let min_eig = m.symmetric_eigenvalues().min();
    if min_eig < T::lit(1e-8) {
        return Err(Error::DegenerateLandmarks(format!(
            "gradient linearization is not positive definite (min eigenvalue {min_eig})"
        )));
    }
    Ok(m)
}

/// Convenience wrapper over [`lie::adjoint_star_coords`] for poses.
pub fn adjoint_star_coords<T: Scalar>(
    pose: &Se3<T>,
    basis: &Se3Basis<T>,
    e: &Vector6<T>,
) -> Vector6<T> {
    lie::adjoint_star_coords(&pose.adjoint(basis), e)
}

/// Largest relative discrepancy, `‖e − ê‖∞ / ‖ê‖∞`, between [`gradient_coords`] and
/// central differences `ê_i = (f(exp(hB_i)T̂) − f(exp(−hB_i)T̂)) / 2h` over
/// `samples` seeded random pairs `(T̂, T)` with noise-free outputs.
pub fn gradient_fd_error<T: Scalar>(refs: &LandmarkSet<T>, samples: usize, seed: u64, h: T) -> T {
    use rand::{Rng, SeedableRng};
    let basis = se3_basis::<T>();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut phi = Vector3::<T>::from_fn(|_, _| T::lit(rng.gen_range(-2.0..2.0)));
        let max = T::lit(std::f64::consts::PI - 0.1);
        let angle = phi.norm();
        if angle > max {
            phi *= max / angle;
        }
        let r = Vector3::<T>::from_fn(|_, _| T::lit(rng.gen_range(-2.0..2.0)));
        se3_exp(&algebra_from_twist(&phi, &r))
    };
    let mut worst = T::zero();
    for _ in 0..samples {
        let est = draw(&mut rng);
        let truth = draw(&mut rng);
        let y = exact_outputs(&truth, refs);
        let e = gradient_coords(&est, &y, refs, &basis);
        let fd = Vector6::<T>::from_fn(|i, _| {
            let mut d = Vector6::zeros();
            d[i] = h;
            let fp = cost(&(exp_coords(&basis, &d) * est), &y, refs);
            let fm = cost(&(exp_coords(&basis, &(-d)) * est), &y, refs);
            (fp - fm) / (h * T::lit(2.0))
        });
        let scale = fd.amax();
        if scale > T::zero() {
            worst = worst.max((e - fd).amax() / scale);
        }
    }
    worst
}
