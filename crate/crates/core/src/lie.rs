//! Basis machinery for matrix Lie algebras.
//!
//! A [`BasisSet`] holds an orthonormal basis `{b_1, …, b_D}` of a Lie algebra
//! embedded in `N × N` matrices. Orthonormality is taken with respect to the
//! trace inner product `⟨A, B⟩ = tr(AᵀB)`, which makes the right-invariant
//! metric on the group collapse to the Euclidean dot product of coordinate
//! vectors. Everything downstream (gradients, innovations, disturbance
//! estimates) is expressed in these coordinates.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Orthonormal basis of a matrix Lie algebra of dimension `D` inside `N × N` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet<T: Scalar, const N: usize, const D: usize> {
    elements: [SMatrix<T, N, N>; D],
}

impl<T: Scalar, const N: usize, const D: usize> BasisSet<T, N, D> {
    /// Builds a basis, rejecting element sets that are not orthonormal under
    /// the trace inner product.
    pub fn new(elements: [SMatrix<T, N, N>; D]) -> Result<Self> {
        let tol = T::lit(T::EXACT_TOL);
        for i in 0..D {
            for j in 0..D {
                let ip = trace_inner(&elements[i], &elements[j]);
                let want = if i == j { T::one() } else { T::zero() };
                if (ip - want).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "basis not orthonormal: tr(b{}ᵀ b{}) = {}",
                        i + 1,
                        j + 1,
                        ip
                    )));
                }
            }
        }
        Ok(Self { elements })
    }

    pub fn dim(&self) -> usize {
        D
    }

    pub fn elements(&self) -> &[SMatrix<T, N, N>; D] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &SMatrix<T, N, N> {
        &self.elements[i]
    }

    /// `S(a) = Σ a_i b_i`.
    pub fn hat(&self, a: &SVector<T, D>) -> SMatrix<T, N, N> {
        let mut m = SMatrix::<T, N, N>::zeros();
        for (ai, bi) in a.iter().zip(self.elements.iter()) {
            m += bi * *ai;
        }
        m
    }

    /// Slice-based `hat`, for callers holding coordinates of unchecked length.
    pub fn hat_slice(&self, a: &[T]) -> Result<SMatrix<T, N, N>> {
        if a.len() != D {
            return Err(Error::Dimension {
                expected: D,
                got: a.len(),
            });
        }
        Ok(self.hat(&SVector::<T, D>::from_column_slice(a)))
    }

    /// Basis coefficients `tr(b_iᵀ M)` without checking algebra membership.
    pub fn coefficients(&self, m: &SMatrix<T, N, N>) -> SVector<T, D> {
        SVector::<T, D>::from_fn(|i, _| trace_inner(&self.elements[i], m))
    }

    /// Inverse of [`hat`](Self::hat). Fails when `m` is farther than the
    /// scalar's `VEE_TOL` (Frobenius) from the algebra.
    pub fn vee(&self, m: &SMatrix<T, N, N>) -> Result<SVector<T, D>> {
        let a = self.coefficients(m);
        let distance = (m - self.hat(&a)).norm();
        if distance > T::lit(T::VEE_TOL) {
            return Err(Error::OffAlgebra {
                distance: distance.as_f64(),
            });
        }
        Ok(a)
    }

    /// Orthogonal projection of an arbitrary matrix onto the algebra.
    pub fn project(&self, m: &SMatrix<T, N, N>) -> SMatrix<T, N, N> {
        self.hat(&self.coefficients(m))
    }

    /// Matrix of `Ad_X` in basis coordinates: column `i` is `vee(X b_i X⁻¹)`.
    ///
    /// `x_inv` must be the inverse of `x`; callers on a specific group
    /// usually have a cheap closed form for it.
    pub fn adjoint_matrix(&self, x: &SMatrix<T, N, N>, x_inv: &SMatrix<T, N, N>) -> SMatrix<T, D, D> {
        let mut ad = SMatrix::<T, D, D>::zeros();
        for (i, bi) in self.elements.iter().enumerate() {
            let conj = x * bi * x_inv;
            ad.set_column(i, &self.coefficients(&conj));
        }
        ad
    }
}

/// `Ad*_X` in coordinates. With an orthonormal basis the metric is the dot
/// product, so the metric adjoint is the plain transpose.
pub fn adjoint_star_coords<T: Scalar, const D: usize>(
    ad: &SMatrix<T, D, D>,
    e: &SVector<T, D>,
) -> SVector<T, D> {
    ad.tr_mul(e)
}

/// `tr(AᵀB)`.
pub fn trace_inner<T: Scalar, const N: usize>(a: &SMatrix<T, N, N>, b: &SMatrix<T, N, N>) -> T {
    a.component_mul(b).sum()
}
