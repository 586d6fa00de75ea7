#![allow(dead_code)]

use hocf::se3::{self, Se3, Se3Basis};
use nalgebra::{Matrix4, Vector3, Vector6};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn basis() -> Se3Basis<f64> {
    se3::se3_basis()
}

/// Coordinates whose physical rotation angle is at most `max_angle`.
pub fn random_coords(rng: &mut ChaCha8Rng, max_angle: f64, max_trans: f64) -> Vector6<f64> {
    let axis = loop {
        let v = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let n: f64 = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v / n;
        }
    };
    let angle = rng.gen_range(0.0..max_angle);
    let v = Vector3::from_fn(|_, _| rng.gen_range(-max_trans..max_trans));
    se3::coords_from_twist(&(axis * angle), &v)
}

pub fn random_pose(rng: &mut ChaCha8Rng) -> Se3<f64> {
    se3::exp_coords(&basis(), &random_coords(rng, std::f64::consts::PI - 0.1, 2.0))
}

/// Dense matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn dense_expm(m: &Matrix4<f64>) -> Matrix4<f64> {
    let norm = m.norm();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = m / 2f64.powi(s);
    let mut term = Matrix4::identity();
    let mut sum = Matrix4::identity();
    for k in 1..=20 {
        term = term * a / k as f64;
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

/// `½ Σ ‖T̂⁻¹ȳ_j − T⁻¹ȳ_j‖²` evaluated with general matrix inverses.
pub fn brute_cost(est: &Matrix4<f64>, truth: &Matrix4<f64>, refs: &[nalgebra::Vector4<f64>]) -> f64 {
    let ei = est.try_inverse().unwrap();
    let ti = truth.try_inverse().unwrap();
    refs.iter()
        .map(|y| 0.5 * (ei * y - ti * y).norm_squared())
        .sum()
}
