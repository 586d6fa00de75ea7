//! Pose-estimation scenarios: truth trajectory, seeded sensor corruption and
//! the case runners producing per-step error metrics.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix4, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::disturbance::{EbarMode, InternalModel};
use crate::error::{Error, Result};
use crate::lti::{notch, notch_design, TransferFunction};
use crate::observer::{
    group_error, landmark_filter, DisturbanceEstimator, Integrator, Measurement, Observer,
    ObserverConfig,
};
use crate::se3::{self, algebra_from_twist, se3_exp, se3_log, LandmarkSet, Se3, Se3Basis};

/// Frequency of the harmonic velocity disturbance, rad/s.
pub const DISTURBANCE_FREQ: f64 = 0.2 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    /// Landmark noise only.
    Case1,
    /// Landmark noise plus harmonic velocity disturbance.
    Case2,
    /// Case 2 plus constant velocity bias.
    Case2Bias,
    /// Case 2 with bias, compensated by the disturbance observer.
    Case3,
}

impl CaseId {
    pub fn label(self) -> &'static str {
        match self {
            CaseId::Case1 => "1",
            CaseId::Case2 => "2",
            CaseId::Case2Bias => "2b",
            CaseId::Case3 => "3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "case1" => Some(CaseId::Case1),
            "2" | "case2" => Some(CaseId::Case2),
            "2b" | "case2b" | "case2bias" => Some(CaseId::Case2Bias),
            "3" | "case3" => Some(CaseId::Case3),
            _ => None,
        }
    }

    fn harmonic(self) -> bool {
        !matches!(self, CaseId::Case1)
    }

    fn bias(self) -> bool {
        matches!(self, CaseId::Case2Bias | CaseId::Case3)
    }
}

/// Scalar filter designs compared in the scenarios.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterChoice {
    /// `H₁ = 2`.
    H1,
    /// `H₂ = 9.7/(s + 6.2)`.
    H2,
    /// `H₂` reshaped with a notch at 0.2π rad/s.
    H3,
    Custom(TransferFunction<f64>),
}

impl FilterChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h1" => Some(FilterChoice::H1),
            "h2" => Some(FilterChoice::H2),
            "h3" => Some(FilterChoice::H3),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FilterChoice::H1 => "H1",
            FilterChoice::H2 => "H2",
            FilterChoice::H3 => "H3",
            FilterChoice::Custom(_) => "custom",
        }
    }

    pub fn transfer_function(&self) -> Result<TransferFunction<f64>> {
        match self {
            FilterChoice::H1 => Ok(TransferFunction::gain(2.0)),
            FilterChoice::H2 => h2(),
            FilterChoice::H3 => notch_design(&h2()?, &reference_notch()),
            FilterChoice::Custom(tf) => Ok(tf.clone()),
        }
    }
}

fn h2() -> Result<TransferFunction<f64>> {
    TransferFunction::new(&[9.7], &[1.0, 6.2])
}

/// `M(s) = (s² + 0.1s + (0.2π)²)/(s² + s + (0.2π)²)`.
pub fn reference_notch() -> TransferFunction<f64> {
    notch(DISTURBANCE_FREQ, 0.1, 1.0)
}

/// Truth motion: `ω(t) = a_ω cos(νt) + c_ω`, `v(t) = a_v cos(νt) + c_v`, body frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryParams {
    /// Initial attitude as a rotation vector, rad.
    pub phi0: Vector3<f64>,
    /// Initial position, m.
    pub r0: Vector3<f64>,
    pub omega_amp: Vector3<f64>,
    pub omega_offset: Vector3<f64>,
    pub v_amp: Vector3<f64>,
    pub v_offset: Vector3<f64>,
    /// ν, rad/s.
    pub freq: f64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        let k = -PI * PI / 60.0;
        Self {
            phi0: Vector3::new(PI / 6.0, 0.0, 0.0),
            r0: Vector3::new(1.0, 1.0, 1.0),
            omega_amp: Vector3::repeat(k),
            omega_offset: Vector3::zeros(),
            v_amp: Vector3::repeat(0.1 * k),
            v_offset: Vector3::zeros(),
            freq: PI / 10.0,
        }
    }
}

impl TrajectoryParams {
    pub fn initial_pose(&self) -> Se3<f64> {
        let rot = se3_exp(&algebra_from_twist(&self.phi0, &Vector3::zeros())).rotation();
        Se3::from_parts(&rot, &self.r0).expect("exp yields a rotation")
    }

    /// `V(t) = [[ω^×, v], [0, 0]]`.
    pub fn velocity(&self, t: f64) -> Matrix4<f64> {
        let c = (self.freq * t).cos();
        algebra_from_twist(
            &(self.omega_amp * c + self.omega_offset),
            &(self.v_amp * c + self.v_offset),
        )
    }
}

/// Fine-step RK4 integration of `Ṫ = T V(t)`.
#[derive(Debug, Clone)]
pub struct TruthPropagator {
    params: TrajectoryParams,
    pose: Matrix4<f64>,
    t: f64,
    substeps: usize,
}

impl TruthPropagator {
    pub fn new(params: TrajectoryParams, substeps: usize) -> Self {
        let pose = *params.initial_pose().matrix();
        Self {
            params,
            pose,
            t: 0.0,
            substeps: substeps.max(1),
        }
    }

    pub fn pose(&self) -> Se3<f64> {
        se3::polar_project(&self.pose)
    }

    pub fn raw_pose(&self) -> &Matrix4<f64> {
        &self.pose
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn params(&self) -> &TrajectoryParams {
        &self.params
    }

    /// Integrates from the current time to `t_end`.
    pub fn advance_to(&mut self, t_end: f64) {
        let span = t_end - self.t;
        if span <= 0.0 {
            return;
        }
        let h = span / self.substeps as f64;
        let p = &self.params;
        for k in 0..self.substeps {
            let t0 = self.t + h * k as f64;
            let v0 = p.velocity(t0);
            let vm = p.velocity(t0 + 0.5 * h);
            let v1 = p.velocity(t0 + h);
            let m = self.pose;
            let k1 = m * v0;
            let k2 = (m + k1 * (0.5 * h)) * vm;
            let k3 = (m + k2 * (0.5 * h)) * vm;
            let k4 = (m + k3 * h) * v1;
            self.pose = m + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        self.t = t_end;
    }
}

/// Pose and velocity of the truth trajectory at `t`, integrated from 0 on a
/// grid of `dt`, each interval split into 10 RK4 substeps.
pub fn true_state(params: &TrajectoryParams, t: f64, dt: f64) -> (Se3<f64>, Matrix4<f64>) {
    let mut prop = TruthPropagator::new(params.clone(), 10);
    let n = (t / dt).round() as usize;
    for k in 1..=n {
        prop.advance_to(k as f64 * dt);
    }
    prop.advance_to(t);
    (prop.pose(), params.velocity(t))
}

/// Ranges for the seeded sensor corruption. Samples are uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParams {
    /// Sinusoids superposed in each landmark-noise component.
    pub components: usize,
    pub freq_range: (f64, f64),
    pub amp_range: (f64, f64),
    /// Range of both sine and cosine coefficients of the velocity disturbance.
    pub coef_range: (f64, f64),
    pub bias_range: (f64, f64),
    pub disturbance_freq: f64,
    /// Multiplies the landmark noise; 0 gives exact landmark outputs.
    pub landmark_scale: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            components: 3,
            freq_range: (8.0 * PI, 16.0 * PI),
            amp_range: (0.05, 0.4),
            coef_range: (0.1, 0.2),
            bias_range: (-0.5, 0.5),
            disturbance_freq: DISTURBANCE_FREQ,
            landmark_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Harmonic {
    amp: f64,
    freq: f64,
    phase: f64,
}

/// Deterministic noise source: every parameter is drawn once from the seed,
/// after which samples are pure functions of time.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGenerator {
    landmark: Vec<[Vec<Harmonic>; 6]>,
    alpha: Vector6<f64>,
    beta: Vector6<f64>,
    bias: Vector6<f64>,
    harmonic: bool,
    with_bias: bool,
    freq: f64,
    scale: f64,
}

impl NoiseGenerator {
    pub fn new(case: CaseId, params: &NoiseParams, landmarks: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |(lo, hi): (f64, f64)| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let mut landmark = Vec::with_capacity(landmarks);
        for _ in 0..landmarks {
            let chan: [Vec<Harmonic>; 6] = std::array::from_fn(|_| {
                (0..params.components)
                    .map(|_| Harmonic {
                        amp: draw(params.amp_range),
                        freq: draw(params.freq_range),
                        phase: draw((0.0, 2.0 * PI)),
                    })
                    .collect()
            });
            landmark.push(chan);
        }
        let alpha = Vector6::from_fn(|_, _| draw(params.coef_range));
        let beta = Vector6::from_fn(|_, _| draw(params.coef_range));
        let bias = Vector6::from_fn(|_, _| draw(params.bias_range));
        Self {
            landmark,
            alpha,
            beta,
            bias,
            harmonic: case.harmonic(),
            with_bias: case.bias(),
            freq: params.disturbance_freq,
            scale: params.landmark_scale,
        }
    }

    /// Landmark noise coordinates `n_j(t)`.
    pub fn landmark_noise(&self, t: f64) -> Vec<Vector6<f64>> {
        self.landmark
            .iter()
            .map(|chan| {
                Vector6::from_fn(|i, _| {
                    self.scale
                        * chan[i]
                            .iter()
                            .map(|h| h.amp * (h.freq * t + h.phase).sin())
                            .sum::<f64>()
                })
            })
            .collect()
    }

    /// Velocity disturbance coordinates `w(t)`.
    pub fn velocity_noise(&self, t: f64) -> Vector6<f64> {
        let mut w = Vector6::zeros();
        if self.harmonic {
            let (s, c) = (self.freq * t).sin_cos();
            w += self.alpha * s + self.beta * c;
        }
        if self.with_bias {
            w += self.bias;
        }
        w
    }

    pub fn sample(&self, t: f64) -> (Vec<Vector6<f64>>, Vector6<f64>) {
        (self.landmark_noise(t), self.velocity_noise(t))
    }

    pub fn alpha(&self) -> &Vector6<f64> {
        &self.alpha
    }
    pub fn beta(&self) -> &Vector6<f64> {
        &self.beta
    }
    pub fn bias(&self) -> &Vector6<f64> {
        &self.bias
    }
}

/// What the velocity sensor reports for the interval `[t_k, t_k + dt]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocitySampling {
    /// `V(t_k)`.
    Instant,
    /// `log(X(t_k)⁻¹ X(t_k + dt)) / dt`, the constant velocity that
    /// reproduces the true increment, as an integrating sensor would.
    #[default]
    IntervalMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceConfig {
    pub freqs: Vec<f64>,
    pub bias: bool,
    pub rho: f64,
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        Self {
            freqs: vec![DISTURBANCE_FREQ],
            bias: true,
            rho: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub case: CaseId,
    pub filter: FilterChoice,
    pub duration: f64,
    pub dt: f64,
    pub seed: u64,
    pub trajectory: TrajectoryParams,
    pub noise: NoiseParams,
    pub landmarks: Vec<Vector3<f64>>,
    /// Disturbance observer; `None` runs the plain complementary filter.
    pub disturbance: Option<DisturbanceConfig>,
    pub ebar_mode: EbarMode,
    pub integrator: Integrator,
    pub velocity_sampling: VelocitySampling,
    /// RK4 substeps of the truth integrator per observer step.
    pub truth_substeps: usize,
}

impl ScenarioConfig {
    /// Defaults for a case: 60 s at 1 ms, seed 42; the disturbance observer
    /// is enabled for case 3 only.
    pub fn new(case: CaseId, filter: FilterChoice) -> Self {
        Self {
            case,
            filter,
            duration: 60.0,
            dt: 1e-3,
            seed: 42,
            trajectory: TrajectoryParams::default(),
            noise: NoiseParams::default(),
            landmarks: vec![Vector3::x(), Vector3::y(), Vector3::z()],
            disturbance: (case == CaseId::Case3).then(DisturbanceConfig::default),
            ebar_mode: EbarMode::default(),
            integrator: Integrator::default(),
            velocity_sampling: VelocitySampling::default(),
            truth_substeps: 10,
        }
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !(self.dt > 0.0) {
            return Err(Error::InvalidArgument("duration and dt must be positive".into()));
        }
        if self.duration / self.dt > 1e7 {
            return Err(Error::InvalidArgument(format!(
                "duration/dt = {} exceeds 1e7 steps",
                self.duration / self.dt
            )));
        }
        if let Some(d) = &self.disturbance {
            if !(d.rho >= 0.0) {
                return Err(Error::InvalidArgument("rho must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// Metrics logged after every observer step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub t: f64,
    /// Attitude error angle, rad.
    pub phi_err: f64,
    /// Position error, m.
    pub pos_err: f64,
    /// `‖w − ŵ‖` in algebra coordinates.
    pub wtilde_norm: f64,
    /// Noise-free landmark cost `f(X̂, X)`.
    pub f_val: f64,
    pub xf_norm: f64,
    /// The attitude error was too close to π for a unique logarithm.
    pub flagged: bool,
}

pub const CSV_HEADER: &str = "t,phi_err,pos_err,wtilde_norm,f_val,xf_norm";

impl RunRecord {
    /// One CSV row, 17 significant digits per field, no line terminator.
    pub fn csv_row(&self) -> String {
        [self.t, self.phi_err, self.pos_err, self.wtilde_norm, self.f_val, self.xf_norm]
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Writes the header and one row per record, LF-terminated.
pub fn write_csv<W: std::io::Write>(mut out: W, records: &[RunRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    out.flush()
}

/// Attitude angle and position norm of a group error. Fails when the
/// rotation angle is within the logarithm's ambiguity margin of π.
pub fn compute_metrics(err: &Se3<f64>, basis: &Se3Basis<f64>) -> Result<(f64, f64)> {
    let log = se3_log(err)?;
    let (omega, _) = se3::twist_from_coords(&basis.coefficients(&log));
    Ok((omega.norm(), err.translation().norm()))
}

/// A scenario in progress.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: ScenarioConfig,
    truth: TruthPropagator,
    noise: NoiseGenerator,
    observer: Observer<f64>,
    refs: LandmarkSet<f64>,
    basis: Se3Basis<f64>,
    step: usize,
}

impl Simulation {
    /// Observer starts at `T̂ = I`, `x_f = 0`, `x̂_d = 0`.
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let basis = se3::se3_basis();
        let refs = LandmarkSet::new(&cfg.landmarks)?;
        let m1 = se3::linearize_m1(&refs, &basis)?;
        let m1 = DMatrix::from_column_slice(6, 6, m1.as_slice());
        let filter = landmark_filter(&cfg.filter.transfer_function()?, &m1)?;
        let disturbance = match &cfg.disturbance {
            Some(d) => Some(DisturbanceEstimator::new(InternalModel::new(&d.freqs, d.bias)?)),
            None => None,
        };
        let obs_cfg = ObserverConfig {
            integrator: cfg.integrator,
            dt: cfg.dt,
            ebar_mode: cfg.ebar_mode,
            rho: cfg.disturbance.as_ref().map_or(0.0, |d| d.rho),
        };
        let observer = Observer::new(Se3::identity(), filter, disturbance, refs.clone(), obs_cfg)?;
        let noise = NoiseGenerator::new(cfg.case, &cfg.noise, refs.len(), cfg.seed);
        let truth = TruthPropagator::new(cfg.trajectory.clone(), cfg.truth_substeps);
        Ok(Self {
            cfg,
            truth,
            noise,
            observer,
            refs,
            basis,
            step: 0,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }
    pub fn observer(&self) -> &Observer<f64> {
        &self.observer
    }
    pub fn observer_mut(&mut self) -> &mut Observer<f64> {
        &mut self.observer
    }
    pub fn truth(&self) -> Se3<f64> {
        self.truth.pose()
    }
    pub fn noise(&self) -> &NoiseGenerator {
        &self.noise
    }
    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.dt
    }
    pub fn landmarks(&self) -> &LandmarkSet<f64> {
        &self.refs
    }

    /// One observer step; returns the metrics at the new time.
    ///
    /// Landmarks are observed at the start of the step. The velocity reading
    /// covers the whole step (see [`VelocitySampling`]).
    pub fn step(&mut self) -> Result<RunRecord> {
        let t = self.time();
        let (n, w) = self.noise.sample(t);
        let pose = self.truth.pose();
        let outputs = se3::measure(&pose, &self.refs, &self.basis, &n)?;
        let t_next = (self.step + 1) as f64 * self.cfg.dt;
        self.truth.advance_to(t_next);
        let v = match self.cfg.velocity_sampling {
            VelocitySampling::Instant => self.cfg.trajectory.velocity(t),
            VelocitySampling::IntervalMean => {
                let increment = pose.inverse() * self.truth.pose();
                se3_log(&increment)? / self.cfg.dt
            }
        };
        let meas = Measurement {
            t,
            outputs,
            velocity: v + self.basis.hat(&w),
        };
        self.observer.step(&meas)?;
        self.step += 1;
        Ok(self.record())
    }

    /// Metrics for the current observer and truth states.
    pub fn record(&self) -> RunRecord {
        let t = self.time();
        let truth = self.truth.pose();
        let est = self.observer.state.estimate;
        let err = group_error(&est, &truth);
        let (phi_err, pos_err, flagged) = match compute_metrics(&err, &self.basis) {
            Ok((p, r)) => (p, r, false),
            Err(_) => (err.rotation_angle(), err.translation().norm(), true),
        };
        let w = self.noise.velocity_noise(t);
        let wtilde_norm = (w - self.observer.w_hat()).norm();
        let f_val = se3::cost(&est, &se3::exact_outputs(&truth, &self.refs), &self.refs);
        RunRecord {
            t,
            phi_err,
            pos_err,
            wtilde_norm,
            f_val,
            xf_norm: self.observer.state.filter.state().norm(),
            flagged,
        }
    }
}

/// Runs a scenario to completion, one record per step.
pub fn run_case(cfg: &ScenarioConfig) -> Result<Vec<RunRecord>> {
    let mut sim = Simulation::new(cfg.clone())?;
    (0..cfg.steps()).map(|_| sim.step()).collect()
}

/// Mean attitude and position errors over the trailing `window` seconds.
pub fn steady_state_mean(records: &[RunRecord], window: f64) -> (f64, f64) {
    let Some(last) = records.last() else {
        return (f64::NAN, f64::NAN);
    };
    let tail: Vec<_> = records
        .iter()
        .filter(|r| r.t > last.t - window + 1e-12)
        .collect();
    let n = tail.len() as f64;
    (
        tail.iter().map(|r| r.phi_err).sum::<f64>() / n,
        tail.iter().map(|r| r.pos_err).sum::<f64>() / n,
    )
}
