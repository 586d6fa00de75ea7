use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use hocf::lti::{spr_check, tf_to_ss};
use hocf::se3::{self, LandmarkSet};
use hocf::sim::{run_case, steady_state_mean, write_csv, FilterChoice, RunRecord, ScenarioConfig};
use nalgebra::Vector3;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    CheckFailed = 1,
    Usage = 2,
    Integration = 3,
    Degenerate = 4,
}

#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self {
            exit,
            message: message.into(),
        }
    }
}

impl From<hocf::Error> for Failure {
    fn from(e: hocf::Error) -> Self {
        let exit = match e {
            hocf::Error::Integration { .. } => Exit::Integration,
            hocf::Error::DegenerateLandmarks(_) => Exit::Degenerate,
            _ => Exit::Usage,
        };
        Failure::new(exit, e.to_string())
    }
}

impl From<crate::config::ConfigError> for Failure {
    fn from(e: crate::config::ConfigError) -> Self {
        Failure::new(Exit::Usage, e.to_string())
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::new(Exit::Usage, format!("{}: {e}", path.display()))
}

/// Trailing window for the steady-state summary, s.
pub const SUMMARY_WINDOW: f64 = 2.0;

pub fn describe(cfg: &ScenarioConfig) -> String {
    format!(
        "case {} filter {} duration {} s dt {} s seed {}{}",
        cfg.case.label(),
        cfg.filter.label(),
        cfg.duration,
        cfg.dt,
        cfg.seed,
        if cfg.disturbance.is_some() { " with disturbance observer" } else { "" }
    )
}

/// Runs one scenario. The CSV goes to `output`, or to stdout when absent;
/// the summary goes to whichever stream the CSV does not use.
pub fn run(cfg: &ScenarioConfig, output: Option<&Path>, verbose: bool) -> Result<(), Failure> {
    if verbose {
        eprintln!("running {}", describe(cfg));
    }
    let records = run_case(cfg)?;
    let summary = summary_line(cfg.filter.label(), &records);
    match output {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_failure(path, e))?;
            write_csv(BufWriter::new(file), &records).map_err(|e| io_failure(path, e))?;
            println!("{summary}");
        }
        None => {
            let stdout = io::stdout();
            write_csv(BufWriter::new(stdout.lock()), &records)
                .map_err(|e| Failure::new(Exit::Usage, format!("stdout: {e}")))?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

fn summary_line(label: &str, records: &[RunRecord]) -> String {
    let (phi, pos) = steady_state_mean(records, SUMMARY_WINDOW);
    let last = records.last().map_or(f64::NAN, |r| r.wtilde_norm);
    format!(
        "{label}: mean over final {SUMMARY_WINDOW} s: phi_err {phi:.6e} rad, pos_err {pos:.6e} m; final wtilde_norm {last:.6e}"
    )
}

/// Runs every preset filter on the scenario in parallel and prints a table.
pub fn compare(cfg: &ScenarioConfig, output: Option<&Path>, verbose: bool) -> Result<(), Failure> {
    let filters = [FilterChoice::H1, FilterChoice::H2, FilterChoice::H3];
    if verbose {
        eprintln!("comparing H1, H2, H3 on {}", describe(cfg));
    }
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = filters
            .iter()
            .map(|f| {
                let mut c = cfg.clone();
                c.filter = f.clone();
                s.spawn(move || run_case(&c))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run panicked")).collect()
    });
    let mut table = String::from("filter,phi_err_mean,pos_err_mean,wtilde_final\n");
    for (f, r) in filters.iter().zip(results) {
        let records = r?;
        let (phi, pos) = steady_state_mean(&records, SUMMARY_WINDOW);
        let w = records.last().map_or(f64::NAN, |r| r.wtilde_norm);
        table.push_str(&format!("{},{phi:.16e},{pos:.16e},{w:.16e}\n", f.label()));
    }
    match output {
        Some(path) => std::fs::write(path, &table).map_err(|e| io_failure(path, e))?,
        None => print!("{table}"),
    }
    Ok(())
}

/// Prints the positive-realness report; the exit code is `Ok` only if the
/// strictly proper part is SPR (or absent) and the feedthrough is nonnegative.
pub fn check_spr(filter: &FilterChoice) -> Result<Exit, Failure> {
    let tf = filter.transfer_function()?;
    let ss = tf_to_ss(&tf);
    let d = tf.feedthrough();
    println!("filter: {} num {:?} den {:?}", filter.label(), tf.num(), tf.den());
    println!("feedthrough D = {d}");
    if ss.n_states() == 0 {
        let ok = d > 0.0;
        println!("static gain; verdict: {}", if ok { "admissible (D > 0)" } else { "not admissible" });
        return Ok(if ok { Exit::Ok } else { Exit::CheckFailed });
    }
    let r = spr_check(&ss);
    println!("hurwitz: {}", r.hurwitz);
    println!("worst margin: {:.6e} at {:.6e} rad/s", r.worst_margin, r.worst_freq);
    println!(
        "high-frequency tail w^2*lambda: {:.6e} {:.6e} {:.6e} ({})",
        r.tail[0],
        r.tail[1],
        r.tail[2],
        if r.tail_ok { "ok" } else { "failing" }
    );
    let ok = r.spr && d >= 0.0;
    println!(
        "verdict: {}",
        match (r.spr, d >= 0.0) {
            (true, true) => "SPR",
            (true, false) => "strictly proper part SPR but D < 0",
            _ => "not SPR",
        }
    );
    Ok(if ok { Exit::Ok } else { Exit::CheckFailed })
}

pub const GRADIENT_TOL: f64 = 1e-5;

/// Finite-difference gate for the landmark gradient plus the curvature check.
pub fn check_gradient(landmarks: &[Vector3<f64>], samples: usize, seed: u64, h: f64) -> Result<Exit, Failure> {
    let refs = LandmarkSet::new(landmarks)?;
    let basis = se3::se3_basis();
    let m1 = se3::linearize_m1(&refs, &basis)?;
    let eig = m1.symmetric_eigen().eigenvalues;
    let err = se3::gradient_fd_error(&refs, samples, seed, h);
    println!("landmarks: {}", refs.len());
    println!("samples: {samples}, step {h:e}");
    println!("max relative gradient error: {err:.6e} (limit {GRADIENT_TOL:e})");
    let mut sorted: Vec<f64> = eig.iter().copied().collect();
    sorted.sort_by(f64::total_cmp);
    println!("M1 eigenvalues: {sorted:.6?}");
    let ok = err < GRADIENT_TOL && sorted[0] > 0.0;
    println!("verdict: {}", if ok { "pass" } else { "fail" });
    let _ = io::stdout().flush();
    Ok(if ok { Exit::Ok } else { Exit::CheckFailed })
}
