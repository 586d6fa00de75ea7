mod common;

use common::{brute_cost, dense_expm};
use hocf::observer::group_error;
use hocf::se3;
use hocf::sim::{
    run_case, true_state, write_csv, CaseId, FilterChoice, NoiseGenerator, NoiseParams, ScenarioConfig, Simulation,
    TrajectoryParams, TruthPropagator, CSV_HEADER,
};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[test]
fn initial_pose_and_velocity() {
    let p = TrajectoryParams::default();
    let (t0, v0) = true_state(&p, 0.0, 1e-3);
    let (s, c) = (PI / 6.0).sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c);
    assert!((t0.rotation() - rx).amax() < 1e-15);
    assert_eq!(t0.translation(), Vector3::new(1.0, 1.0, 1.0));
    let k = -PI * PI / 60.0;
    let want = se3::algebra_from_twist(&Vector3::repeat(k), &Vector3::repeat(0.1 * k));
    assert!((v0 - want).amax() < 1e-15);
}

#[test]
fn truth_matches_closed_form_flow() {
    // Every V(t) is cos(νt)·V(0), so T(t) = T(0)·exp(sin(νt)/ν · V(0)).
    let p = TrajectoryParams::default();
    let v0 = p.velocity(0.0);
    let mut prop = TruthPropagator::new(p.clone(), 10);
    let t0 = *prop.pose().matrix();
    for k in 1..=10_000 {
        prop.advance_to(k as f64 * 1e-3);
    }
    let want = t0 * dense_expm(&(v0 * ((p.freq * 10.0).sin() / p.freq)));
    assert!((prop.pose().matrix() - want).amax() < 1e-12);
}

#[test]
fn truth_is_converged_in_the_substep() {
    let p = TrajectoryParams {
        omega_offset: Vector3::new(0.1, -0.2, 0.3),
        ..Default::default()
    };
    let mut fine = TruthPropagator::new(p.clone(), 20);
    let mut coarse = TruthPropagator::new(p, 10);
    for k in 1..=10_000 {
        fine.advance_to(k as f64 * 1e-3);
        coarse.advance_to(k as f64 * 1e-3);
    }
    assert!((fine.pose().matrix() - coarse.pose().matrix()).amax() <= 1e-10);
}

#[test]
fn noise_is_absent_from_case1_velocity() {
    let g = NoiseGenerator::new(CaseId::Case1, &NoiseParams::default(), 3, 42);
    for k in 0..100 {
        assert_eq!(g.velocity_noise(k as f64 * 0.37).norm(), 0.0);
    }
}

#[test]
fn case2_disturbance_is_bounded_harmonic() {
    let g = NoiseGenerator::new(CaseId::Case2, &NoiseParams::default(), 3, 42);
    for i in 0..6 {
        for c in [g.alpha()[i], g.beta()[i]] {
            assert!((0.1..=0.2).contains(&c));
        }
    }
    let bound = 2f64.sqrt() * 0.2;
    for k in 0..10_000 {
        let w = g.velocity_noise(k as f64 * 1e-2);
        assert!(w.amax() <= bound);
    }
}

#[test]
fn bias_is_drawn_in_range() {
    let g = NoiseGenerator::new(CaseId::Case2Bias, &NoiseParams::default(), 3, 7);
    assert!(g.bias().iter().all(|b| (-0.5..=0.5).contains(b)));
    let t = 3.2;
    let (s, c) = (0.2 * PI * t).sin_cos();
    let want = g.alpha() * s + g.beta() * c + g.bias();
    assert!((g.velocity_noise(t) - want).amax() < 1e-15);
}

#[test]
fn landmark_noise_spectrum_is_in_range() {
    // Three sinusoids of amplitude ≤ 0.4 bound each component by 1.2.
    let g = NoiseGenerator::new(CaseId::Case1, &NoiseParams::default(), 3, 42);
    let mut peak = 0.0f64;
    for k in 0..20_000 {
        for n in g.landmark_noise(k as f64 * 1e-3) {
            peak = peak.max(n.amax());
        }
    }
    assert!(peak <= 1.2 && peak > 0.1);
    // Mean over many periods of the slowest component (4 Hz) is near zero.
    let mean: f64 = (0..20_000).map(|k| g.landmark_noise(k as f64 * 1e-3)[0][0]).sum::<f64>() / 20_000.0;
    assert!(mean.abs() < 0.05);
}

#[test]
fn noise_is_a_pure_function_of_seed_and_time() {
    let a = NoiseGenerator::new(CaseId::Case3, &NoiseParams::default(), 3, 42);
    let b = NoiseGenerator::new(CaseId::Case3, &NoiseParams::default(), 3, 42);
    let c = NoiseGenerator::new(CaseId::Case3, &NoiseParams::default(), 3, 43);
    for t in [0.0, 1.5, 59.999] {
        assert_eq!(a.sample(t), b.sample(t));
        assert_ne!(a.sample(t), c.sample(t));
    }
    // Order of evaluation does not matter.
    let later = a.sample(10.0);
    let _ = a.sample(3.0);
    assert_eq!(a.sample(10.0), later);
}

#[test]
fn noise_free_case1_converges_by_30s() {
    let mut cfg = ScenarioConfig::new(CaseId::Case1, FilterChoice::H2);
    cfg.noise.landmark_scale = 0.0;
    cfg.duration = 30.0;
    let recs = run_case(&cfg).unwrap();
    let last = recs.last().unwrap();
    assert!((last.t - 30.0).abs() < 1e-9);
    assert!(last.phi_err < 1e-3 && last.pos_err < 1e-3, "{last:?}");
}

#[test]
fn runs_are_bitwise_deterministic() {
    let mut cfg = ScenarioConfig::new(CaseId::Case3, FilterChoice::H3);
    cfg.duration = 5.0;
    let a = run_case(&cfg).unwrap();
    let b = run_case(&cfg).unwrap();
    assert_eq!(a.len(), 5000);
    assert!(a.iter().zip(&b).all(|(x, y)| x.csv_row() == y.csv_row()));
}

#[test]
fn logged_cost_matches_recomputation() {
    let mut cfg = ScenarioConfig::new(CaseId::Case2, FilterChoice::H3);
    cfg.duration = 10.0;
    let mut sim = Simulation::new(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let picks: Vec<usize> = (0..10).map(|_| rng.gen_range(0..10_000)).collect();
    for k in 0..10_000 {
        let rec = sim.step().unwrap();
        if picks.contains(&k) {
            let est = sim.observer().state.estimate;
            let want = brute_cost(est.matrix(), sim.truth().matrix(), sim.landmarks().refs());
            assert!((rec.f_val - want).abs() <= 1e-10, "{} vs {want}", rec.f_val);
            let err = group_error(&est, &sim.truth());
            assert!((rec.pos_err - err.translation().norm()).abs() < 1e-15);
        }
    }
}

#[test]
fn records_are_finite_and_bounded() {
    let mut cfg = ScenarioConfig::new(CaseId::Case2Bias, FilterChoice::H1);
    cfg.duration = 10.0;
    for r in run_case(&cfg).unwrap() {
        assert!((0.0..=PI).contains(&r.phi_err));
        assert!([r.pos_err, r.wtilde_norm, r.f_val, r.xf_norm].iter().all(|v| v.is_finite()));
        assert!(!r.flagged);
    }
}

#[test]
fn csv_layout() {
    let mut cfg = ScenarioConfig::new(CaseId::Case1, FilterChoice::H1);
    cfg.duration = 0.01;
    let recs = run_case(&cfg).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &recs).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 11);
    for (line, r) in lines[1..].iter().zip(&recs) {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields, vec![r.t, r.phi_err, r.pos_err, r.wtilde_norm, r.f_val, r.xf_norm]);
    }
}

#[test]
fn case3_disturbance_error_settles_by_40s() {
    let mut cfg = ScenarioConfig::new(CaseId::Case3, FilterChoice::H2);
    cfg.duration = 40.0;
    let recs = run_case(&cfg).unwrap();
    let last = recs.last().unwrap();
    assert!(last.wtilde_norm < 0.02, "‖w̃(40 s)‖ = {}", last.wtilde_norm);
}
