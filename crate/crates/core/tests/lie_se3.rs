mod common;

use common::{basis, brute_cost, dense_expm, random_coords, random_pose};
use hocf::lie::trace_inner;
use hocf::se3::{self, LandmarkSet, Se3};
use nalgebra::{Matrix4, Matrix6, Vector3, Vector4, Vector6};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{PI, SQRT_2};

fn coords() -> impl Strategy<Value = Vector6<f64>> {
    proptest::array::uniform6(-2.0f64..2.0).prop_map(Vector6::from)
}

fn pose() -> impl Strategy<Value = Se3<f64>> {
    any::<u64>().prop_map(|s| random_pose(&mut ChaCha8Rng::seed_from_u64(s)))
}

fn matrix4() -> impl Strategy<Value = Matrix4<f64>> {
    proptest::collection::vec(-3.0f64..3.0, 16).prop_map(Matrix4::from_vec)
}

#[test]
fn basis_is_orthonormal() {
    let b = basis();
    for i in 0..6 {
        for j in 0..6 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((trace_inner(b.element(i), b.element(j)) - want).abs() <= 1e-12);
        }
    }
}

#[test]
fn hat_of_translation_generator() {
    let m = basis().hat(&Vector6::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0));
    let mut want = Matrix4::zeros();
    want[(0, 3)] = 1.0;
    assert_eq!(m, want);
}

proptest! {
    #[test]
    fn vee_hat_round_trip(a in coords()) {
        let b = basis();
        prop_assert!((b.vee(&b.hat(&a)).unwrap() - a).amax() <= 1e-12);
        let m = b.hat(&a);
        prop_assert!((b.hat(&b.vee(&m).unwrap()) - m).amax() <= 1e-12);
    }

    #[test]
    fn projection_matches_block_formula(m in matrix4()) {
        let b = basis();
        let p = b.project(&m);
        prop_assert!((p - se3::project_block(&m)).amax() <= 1e-12);
        prop_assert!((b.project(&p) - p).amax() <= 1e-12);
    }

    #[test]
    fn projection_is_self_adjoint(m in matrix4(), n in matrix4()) {
        let b = basis();
        let lhs = trace_inner(&b.project(&m), &n);
        let rhs = trace_inner(&m, &b.project(&n));
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn adjoint_is_conjugation(x in pose(), a in coords()) {
        let b = basis();
        let lhs = b.hat(&(x.adjoint(&b) * a));
        let rhs = x.matrix() * b.hat(&a) * x.inverse().matrix();
        prop_assert!((lhs - rhs).amax() <= 1e-10);
    }

    #[test]
    fn adjoint_is_homomorphism(x in pose(), y in pose()) {
        let b = basis();
        let xy = x * y;
        let lhs = x.adjoint(&b) * y.adjoint(&b);
        prop_assert!((lhs - xy.adjoint(&b)).amax() <= 1e-9);
        let inv = x.inverse().adjoint(&b);
        prop_assert!((inv - x.adjoint(&b).try_inverse().unwrap()).amax() <= 1e-9);
    }

    #[test]
    fn adjoint_star_is_metric_adjoint(x in pose(), u in coords(), v in coords()) {
        let b = basis();
        let ad = x.adjoint(&b);
        let lhs = u.dot(&(ad * v));
        let rhs = se3::adjoint_star_coords(&x, &b, &u).dot(&v);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn exp_matches_dense_expm(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = basis().hat(&random_coords(&mut rng, PI - 0.1, 2.0));
        let err = (se3::se3_exp(&m).matrix() - dense_expm(&m)).amax();
        prop_assert!(err <= 1e-10, "err {err}");
    }

    #[test]
    fn cost_and_gradient_are_right_invariant(t_hat in pose(), t in pose(), z in pose()) {
        let b = basis();
        let refs = LandmarkSet::unit_axes();
        let y = se3::exact_outputs(&t, &refs);
        let yz = se3::exact_outputs(&(t * z), &refs);
        let f0 = se3::cost(&t_hat, &y, &refs);
        let f1 = se3::cost(&(t_hat * z), &yz, &refs);
        prop_assert!((f0 - f1).abs() <= 1e-10 * (1.0 + f0));
        let e0 = se3::gradient_coords(&t_hat, &y, &refs, &b).norm();
        let e1 = se3::gradient_coords(&(t_hat * z), &yz, &refs, &b).norm();
        prop_assert!((e0 - e1).abs() <= 1e-10 * (1.0 + e0));
    }

    #[test]
    fn measurement_round_trip(t in pose(), n in proptest::array::uniform3(coords())) {
        // h(T, h(T⁻¹, y)) = y for the action h(T, y) = T⁻¹y.
        let b = basis();
        let refs = LandmarkSet::unit_axes();
        let noisy = se3::measure(&t, &refs, &b, &n.map(|v| v * 0.1)).unwrap();
        for y in &noisy {
            let back = t.inverse().inverse().act(&t.inverse().act(y));
            prop_assert!((back - y).amax() <= 1e-12);
        }
    }
}

#[test]
fn cost_matches_direct_norm() {
    let refs = LandmarkSet::unit_axes();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (a, t) = (random_pose(&mut rng), random_pose(&mut rng));
        let f = se3::cost(&a, &se3::exact_outputs(&t, &refs), &refs);
        let want = brute_cost(a.matrix(), t.matrix(), refs.refs());
        assert!((f - want).abs() <= 1e-10 * (1.0 + want));
    }
    let t = Se3::from_translation(&Vector3::new(1.0, 1.0, 1.0));
    let f = se3::cost(&Se3::identity(), &se3::exact_outputs(&t, &refs), &refs);
    assert!((f - brute_cost(&Matrix4::identity(), t.matrix(), refs.refs())).abs() < 1e-14);
}

#[test]
fn log_round_trips_on_1000_samples() {
    let b = basis();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = random_coords(&mut rng, PI - 0.1, 3.0);
        let x = se3::exp_coords(&b, &a);
        let log = se3::se3_log(&x).unwrap();
        worst = worst.max((b.vee(&log).unwrap() - a).amax());
        worst = worst.max((se3::se3_exp(&log).matrix() - x.matrix()).amax());
    }
    assert!(worst <= 1e-9, "worst {worst}");
}

#[test]
fn log_of_x_rotation_has_scaled_coordinates() {
    let b = basis();
    let x = se3::se3_exp(&se3::algebra_from_twist(&Vector3::new(PI / 6.0, 0.0, 0.0), &Vector3::zeros()));
    let a = b.vee(&se3::se3_log(&x).unwrap()).unwrap();
    assert!((a.fixed_rows::<3>(0).norm() - PI / 6.0 * SQRT_2).abs() < 1e-12);
}

#[test]
fn log_of_identity_is_zero() {
    assert_eq!(se3::se3_log(&Se3::<f64>::identity()).unwrap(), Matrix4::zeros());
}

fn fd_gradient(t_hat: &Se3<f64>, y: &[Vector4<f64>], refs: &LandmarkSet<f64>, h: f64) -> Vector6<f64> {
    let b = basis();
    Vector6::from_fn(|i, _| {
        let mut d = Vector6::zeros();
        d[i] = h;
        let fp = se3::cost(&(se3::exp_coords(&b, &d) * *t_hat), y, refs);
        let fm = se3::cost(&(se3::exp_coords(&b, &(-d)) * *t_hat), y, refs);
        (fp - fm) / (2.0 * h)
    })
}

#[test]
fn gradient_matches_finite_differences() {
    let b = basis();
    let refs = LandmarkSet::unit_axes();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (t_hat, t) = (random_pose(&mut rng), random_pose(&mut rng));
        let y = se3::exact_outputs(&t, &refs);
        let e = se3::gradient_coords(&t_hat, &y, &refs, &b);
        let fd = fd_gradient(&t_hat, &y, &refs, 1e-5);
        worst = worst.max((e - fd).amax() / fd.amax());
    }
    assert!(worst < 1e-5, "worst relative error {worst}");
}

#[test]
fn gradient_vanishes_at_truth() {
    let b = basis();
    let refs = LandmarkSet::unit_axes();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let t = random_pose(&mut rng);
        let y = se3::exact_outputs(&t, &refs);
        assert!(se3::gradient_coords(&t, &y, &refs, &b).amax() < 1e-10);
        assert!(se3::cost(&t, &y, &refs) < 1e-20);
    }
}

#[test]
fn gradient_is_linear_in_small_errors() {
    let b = basis();
    let refs = LandmarkSet::unit_axes();
    let m1 = se3::linearize_m1(&refs, &b).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let t = random_pose(&mut rng);
        let dx = random_coords(&mut rng, 1.0, 1.0).normalize() * 1e-4;
        let t_hat = se3::exp_coords(&b, &dx) * t;
        let e = se3::gradient_coords(&t_hat, &se3::exact_outputs(&t, &refs), &refs, &b);
        // Second-order remainder is O(‖δx‖²) relative to O(‖δx‖).
        assert!((e - m1 * dx).norm() <= 1e-3 * (m1 * dx).norm());
    }
}

/// `M1[i,k] = Σ_j (B_i ȳ_j)·(B_k ȳ_j)`, the Gauss-Newton Hessian at the minimum.
fn gram_m1(refs: &LandmarkSet<f64>) -> Matrix6<f64> {
    let b = basis();
    Matrix6::from_fn(|i, k| {
        refs.refs()
            .iter()
            .map(|y| (b.element(i) * y).dot(&(b.element(k) * y)))
            .sum()
    })
}

#[test]
fn m1_matches_gram_oracle() {
    let b = basis();
    let refs = LandmarkSet::unit_axes();
    let m1 = se3::linearize_m1(&refs, &b).unwrap();
    assert!((m1 - gram_m1(&refs)).amax() < 1e-8);
    assert_eq!(m1, m1.transpose());
    // Richardson cross-check against the coarser step.
    let coarse = se3::m1_with_step(&refs, &b, 1e-4);
    assert!((m1 - coarse).amax() < 1e-7);
    let eig = m1.symmetric_eigen().eigenvalues;
    assert!(eig.min() > 0.0);
    assert!(eig.max() / eig.min() < 1e3);
}

#[test]
fn m1_for_unit_axes_has_closed_form() {
    // [[I, C],[Cᵀ, 3I]] with C[i,b] = ε_{i,j,b}/√2 summed over landmark index j.
    let refs = LandmarkSet::unit_axes();
    let m1 = se3::linearize_m1(&refs, &basis()).unwrap();
    let s = 1.0 / SQRT_2;
    let c = nalgebra::Matrix3::new(0.0, -s, s, s, 0.0, -s, -s, s, 0.0);
    let mut want = Matrix6::zeros();
    want.fixed_view_mut::<3, 3>(0, 0).copy_from(&nalgebra::Matrix3::identity());
    want.fixed_view_mut::<3, 3>(3, 3).copy_from(&(nalgebra::Matrix3::identity() * 3.0));
    want.fixed_view_mut::<3, 3>(0, 3).copy_from(&c);
    want.fixed_view_mut::<3, 3>(3, 0).copy_from(&c.transpose());
    assert!((m1 - want).amax() < 1e-8, "{m1}");
}

#[test]
fn m1_for_other_landmarks_matches_gram_oracle() {
    let refs = LandmarkSet::new(&[
        Vector3::new(2.0, 0.5, -1.0),
        Vector3::new(-1.0, 1.0, 0.3),
        Vector3::new(0.2, -0.7, 1.5),
        Vector3::new(1.0, 1.0, 1.0),
    ])
    .unwrap();
    let m1 = se3::linearize_m1(&refs, &basis()).unwrap();
    assert!((m1 - gram_m1(&refs)).amax() < 1e-7);
}
