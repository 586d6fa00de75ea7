//! Linear time-invariant filters: rational transfer functions, state-space
//! realizations, strict-positive-realness checks and the notch-shaped
//! filter construction used for disturbance attenuation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Scalar rational function `num(s)/den(s)`, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction<T: Scalar> {
    num: Vec<T>,
    den: Vec<T>,
}

impl<T: Scalar> TransferFunction<T> {
    /// Builds a proper transfer function. Leading zeros are stripped and the
    /// denominator is normalized to be monic.
    pub fn new(num: &[T], den: &[T]) -> Result<Self> {
        let num = strip(num);
        let den = strip(den);
        if den.is_empty() {
            return Err(Error::InvalidArgument(
                "denominator must have a nonzero coefficient".into(),
            ));
        }
        let num = if num.is_empty() { vec![T::zero()] } else { num };
        if num.len() > den.len() && !(num.len() == 1 && num[0] == T::zero()) {
            return Err(Error::Improper {
                num: num.len() - 1,
                den: den.len() - 1,
            });
        }
        let lead = den[0];
        Ok(Self {
            num: num.iter().map(|c| *c / lead).collect(),
            den: den.iter().map(|c| *c / lead).collect(),
        })
    }

    pub fn gain(k: T) -> Self {
        Self {
            num: vec![k],
            den: vec![T::one()],
        }
    }

    pub fn num(&self) -> &[T] {
        &self.num
    }

    pub fn den(&self) -> &[T] {
        &self.den
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    pub fn freq_response(&self, omega: T) -> Complex<T> {
        self.eval(Complex::new(T::zero(), omega))
    }

    /// Feedthrough `lim_{s→∞} H(s)`.
    pub fn feedthrough(&self) -> T {
        if self.num.len() == self.den.len() {
            self.num[0]
        } else {
            T::zero()
        }
    }

    /// Numerator of `H(s) − D`, padded to `order()` coefficients.
    pub fn strictly_proper_num(&self) -> Vec<T> {
        let n = self.order();
        let d = self.feedthrough();
        let padded = pad(&self.num, n + 1);
        padded
            .iter()
            .zip(&self.den)
            .skip(1)
            .map(|(a, b)| *a - d * *b)
            .collect()
    }

    /// Sensitivity `S(jω) = jω / (jω + H(jω))` of the complementary loop.
    pub fn sensitivity(&self, omega: T) -> Complex<T> {
        let s = Complex::new(T::zero(), omega);
        s / (s + self.eval(s))
    }
}

fn strip<T: Scalar>(c: &[T]) -> Vec<T> {
    let first = c.iter().position(|x| *x != T::zero()).unwrap_or(c.len());
    c[first..].to_vec()
}

fn pad<T: Scalar>(c: &[T], len: usize) -> Vec<T> {
    let mut out = vec![T::zero(); len.saturating_sub(c.len())];
    out.extend_from_slice(c);
    out
}

fn poly_eval<T: Scalar>(c: &[T], s: Complex<T>) -> Complex<T> {
    c.iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, k| acc * s + Complex::new(*k, T::zero()))
}

fn poly_mul<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += *x * *y;
        }
    }
    out
}

fn poly_add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let n = a.len().max(b.len());
    pad(a, n).iter().zip(pad(b, n)).map(|(x, y)| *x + y).collect()
}

fn poly_sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    let n = a.len().max(b.len());
    pad(a, n)
        .iter()
        .zip(pad(b, n))
        .map(|(x, y)| *x - y)
        .collect()
}

/// Second-order notch `(s² + z·s + ω₀²)/(s² + p·s + ω₀²)`; the gain at
/// `ω₀` is `z/p`.
pub fn notch<T: Scalar>(center: T, zero_damping: T, pole_damping: T) -> TransferFunction<T> {
    let w2 = center * center;
    TransferFunction {
        num: vec![T::one(), zero_damping, w2],
        den: vec![T::one(), pole_damping, w2],
    }
}

/// Filter whose loop sensitivity equals the base sensitivity shaped by `notch`:
/// solves `s/(s + H₃) = M(s)·s/(s + H)` for `H₃`.
///
/// With `H = n/d` and `M = m_n/m_d` this gives
/// `H₃ = ((s·d + n)·m_d − s·d·m_n) / (d·m_n)`.
pub fn notch_design<T: Scalar>(
    base: &TransferFunction<T>,
    notch: &TransferFunction<T>,
) -> Result<TransferFunction<T>> {
    let sd = poly_mul(&[T::one(), T::zero()], &base.den);
    let loop_den = poly_add(&sd, &base.num);
    let num = poly_sub(&poly_mul(&loop_den, &notch.den), &poly_mul(&sd, &notch.num));
    let den = poly_mul(&base.den, &notch.num);
    TransferFunction::new(&num, &den).map_err(|e| match e {
        Error::Improper { .. } => Error::Design(format!("notch design produced an improper filter: {e}")),
        other => other,
    })
}

/// LTI system `ẋ = A x + B e`, `u = C x + D e` together with its running state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
    x: DVector<T>,
}

impl<T: Scalar> StateSpace<T> {
    /// Checks that the four matrices have consistent shapes; the state starts at zero.
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: DMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        let bad = |what: &str| Error::InvalidArgument(format!("state-space shape mismatch: {what}"));
        if a.ncols() != n {
            return Err(bad("A not square"));
        }
        if b.nrows() != n || c.ncols() != n {
            return Err(bad("B rows / C columns must equal the state dimension"));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(bad("D must be outputs × inputs"));
        }
        Ok(Self {
            x: DVector::zeros(n),
            a,
            b,
            c,
            d,
        })
    }

    /// Pure feedthrough system with no internal state.
    pub fn static_gain(d: DMatrix<T>) -> Self {
        let (p, m) = d.shape();
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
            x: DVector::zeros(0),
        }
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }
    pub fn state(&self) -> &DVector<T> {
        &self.x
    }

    pub fn set_state(&mut self, x: DVector<T>) -> Result<()> {
        if x.len() != self.x.len() {
            return Err(Error::Dimension {
                expected: self.x.len(),
                got: x.len(),
            });
        }
        self.x = x;
        Ok(())
    }

    pub fn reset(&mut self) {
        self.x.fill(T::zero());
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    /// The same system with `D = 0`.
    pub fn strictly_proper_part(&self) -> Self {
        let mut sp = self.clone();
        sp.d.fill(T::zero());
        sp
    }

    /// `C (jωI − A)⁻¹ B + D`.
    pub fn freq_response(&self, omega: T) -> DMatrix<Complex<T>> {
        let cplx = |m: &DMatrix<T>| m.map(|v| Complex::new(v, T::zero()));
        let mut h = cplx(&self.d);
        let n = self.n_states();
        if n == 0 {
            return h;
        }
        let jw = Complex::new(T::zero(), omega);
        let resolvent = DMatrix::<Complex<T>>::identity(n, n) * jw - cplx(&self.a);
        let x = resolvent
            .lu()
            .solve(&cplx(&self.b))
            .unwrap_or_else(|| DMatrix::from_element(n, self.n_inputs(), Complex::new(T::lit(f64::NAN), T::lit(f64::NAN))));
        h += cplx(&self.c) * x;
        h
    }

    /// Advances the state by one RK4 step with the input held constant over
    /// `dt`, then returns `u = C x⁺ + D e`.
    pub fn step(&mut self, e: &DVector<T>, dt: T) -> DVector<T> {
        if self.n_states() > 0 {
            let forced = &self.b * e;
            let f = |x: &DVector<T>| &self.a * x + &forced;
            let half = dt * T::lit(0.5);
            let k1 = f(&self.x);
            let k2 = f(&(&self.x + &k1 * half));
            let k3 = f(&(&self.x + &k2 * half));
            let k4 = f(&(&self.x + &k3 * dt));
            self.x += (k1 + k2 * T::lit(2.0) + k3 * T::lit(2.0) + k4) * (dt / T::lit(6.0));
        }
        self.output(e)
    }

    /// `C x + D e` at the current state.
    pub fn output(&self, e: &DVector<T>) -> DVector<T> {
        &self.c * &self.x + &self.d * e
    }
}

/// Controllable canonical realization; the feedthrough comes from polynomial
/// division and a constant transfer function yields a state-free system.
pub fn tf_to_ss<T: Scalar>(tf: &TransferFunction<T>) -> StateSpace<T> {
    let n = tf.order();
    let d = DMatrix::from_element(1, 1, tf.feedthrough());
    if n == 0 {
        return StateSpace::static_gain(d);
    }
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        a[(0, j)] = -tf.den[j + 1];
    }
    for i in 1..n {
        a[(i, i - 1)] = T::one();
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(0, 0)] = T::one();
    let c = DMatrix::from_row_slice(1, n, &tf.strictly_proper_num());
    StateSpace::new(a, b, c, d).expect("canonical realization is consistent")
}

/// True iff every eigenvalue of `a` has real part below `−1e-10`.
pub fn is_hurwitz<T: Scalar>(a: &DMatrix<T>) -> bool {
    if a.nrows() == 0 {
        return true;
    }
    if a.nrows() != a.ncols() {
        return false;
    }
    a.clone()
        .complex_eigenvalues()
        .iter()
        .all(|l| l.re < T::lit(-1e-10))
}

/// Outcome of [`spr_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SprReport {
    pub hurwitz: bool,
    /// Smallest eigenvalue of `H(jω) + Hᴴ(jω)` over the grid.
    pub worst_margin: f64,
    pub worst_freq: f64,
    /// `ω²·λ_min` at the three largest grid frequencies (ascending ω).
    pub tail: [f64; 3],
    pub tail_ok: bool,
    pub spr: bool,
}

pub const SPR_GRID_MIN: f64 = 1e-4;
pub const SPR_GRID_MAX: f64 = 1e6;
pub const SPR_GRID_POINTS: usize = 2000;

/// Frequency-domain test of strict positive realness of the strictly proper
/// part `C(sI − A)⁻¹B` (any feedthrough is ignored):
///
/// 1. `A` is Hurwitz,
/// 2. `λ_min(H(jω) + Hᴴ(jω)) > 0` on a 2000-point log grid over `[1e-4, 1e6]` rad/s,
/// 3. `ω²·λ_min` is positive at the three highest grid points and not
///    decaying there (relative drop below 1e-6), a finite-grid proxy for
///    the limit condition.
pub fn spr_check<T: Scalar>(ss: &StateSpace<T>) -> SprReport {
    let sp = ss.strictly_proper_part();
    let hurwitz = is_hurwitz(sp.a());
    let mut worst_margin = f64::INFINITY;
    let mut worst_freq = f64::NAN;
    let mut tail = [0.0; 3];
    let ratio = (SPR_GRID_MAX / SPR_GRID_MIN).ln() / (SPR_GRID_POINTS - 1) as f64;
    for k in 0..SPR_GRID_POINTS {
        let w = SPR_GRID_MIN * (ratio * k as f64).exp();
        let h = sp.freq_response(T::lit(w));
        let lam = hermitian_part_min_eig(&h);
        if !(lam >= worst_margin) {
            worst_margin = lam;
            worst_freq = w;
        }
        if k + 3 >= SPR_GRID_POINTS {
            tail[k + 3 - SPR_GRID_POINTS] = w * w * lam;
        }
    }
    let tail_ok = tail.iter().all(|v| *v > 0.0)
        && tail.windows(2).all(|p| p[1] >= p[0] * (1.0 - 1e-6));
    let spr = hurwitz && worst_margin > 0.0 && tail_ok;
    SprReport {
        hurwitz,
        worst_margin,
        worst_freq,
        tail,
        tail_ok,
        spr,
    }
}

/// `λ_min(H + Hᴴ)` via the real symmetric embedding `[[Re, −Im], [Im, Re]]`.
pub fn hermitian_part_min_eig<T: Scalar>(h: &DMatrix<Complex<T>>) -> f64 {
    let p = h.nrows();
    if p == 0 || h.ncols() != p {
        return f64::NAN;
    }
    let g = h + h.adjoint();
    let mut emb = DMatrix::<T>::zeros(2 * p, 2 * p);
    for i in 0..p {
        for j in 0..p {
            let z = g[(i, j)];
            emb[(i, j)] = z.re;
            emb[(i + p, j + p)] = z.re;
            emb[(i, j + p)] = -z.im;
            emb[(i + p, j)] = z.im;
        }
    }
    let ev = emb.symmetric_eigenvalues();
    ev.iter().map(|v| v.as_f64()).fold(f64::INFINITY, f64::min)
}

fn check_spd<T: Scalar>(m: &DMatrix<T>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!("{what} must be square")));
    }
    let asym = (m - m.transpose()).norm();
    if asym > T::lit(1e-9) * (T::one() + m.norm()) {
        return Err(Error::InvalidArgument(format!("{what} is not symmetric")));
    }
    let min = m.clone().symmetric_eigenvalues().min();
    if !(min > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "{what} is not positive definite (min eigenvalue {min})"
        )));
    }
    Ok(())
}

/// Replicates a SISO realization over `p = M₁.nrows()` channels and
/// right-multiplies by `M₁⁻¹`, realizing `H(s)·M₁⁻¹`.
///
/// States are ordered channel-major: `x = [x_ch1; x_ch2; …]`.
pub fn mimo_lift<T: Scalar>(scalar: &StateSpace<T>, m1: &DMatrix<T>) -> Result<StateSpace<T>> {
    if scalar.n_inputs() != 1 || scalar.n_outputs() != 1 {
        return Err(Error::InvalidArgument("mimo_lift expects a SISO system".into()));
    }
    check_spd(m1, "M1")?;
    let p = m1.nrows();
    let m1_inv = m1
        .clone()
        .cholesky()
        .expect("SPD checked above")
        .inverse();
    let eye = DMatrix::<T>::identity(p, p);
    let a = eye.kronecker(scalar.a());
    let b = eye.kronecker(scalar.b()) * &m1_inv;
    let c = eye.kronecker(scalar.c());
    let d = m1_inv * scalar.d()[(0, 0)];
    StateSpace::new(a, b, c, d)
}

/// KYP certificate of the lifted system: if `P_s B_s = C_sᵀ` for the SISO
/// realization then `P = M₁ ⊗ P_s` satisfies `P B = Cᵀ` for [`mimo_lift`].
pub fn lift_kyp<T: Scalar>(p_scalar: &DMatrix<T>, m1: &DMatrix<T>) -> DMatrix<T> {
    m1.kronecker(p_scalar)
}
