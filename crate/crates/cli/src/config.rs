//! Run configuration file: TOML with the sections `run`, `trajectory`,
//! `noise`, `filter` and `disturbance`. Every key is optional.

use std::path::Path;

use hocf::disturbance::EbarMode;
use hocf::lti::TransferFunction;
use hocf::observer::Integrator;
use hocf::sim::{CaseId, DisturbanceConfig, FilterChoice, ScenarioConfig, VelocitySampling};
use nalgebra::Vector3;
use serde::Deserialize;

/// Reference text for `--help`.
pub const CONFIG_KEYS: &str = "\
CONFIG KEYS (TOML; all optional):
  [run]
    case = \"1\" | \"2\" | \"2b\" | \"3\"          scenario (default \"1\")
    duration = 60.0                          simulated time, s
    dt = 0.001                               observer step, s
    seed = 42                                noise seed
    integrator = \"lie-splitting\" | \"rk4-project\"
    velocity_sampling = \"interval-mean\" | \"instant\"
    truth_substeps = 10                      RK4 substeps of the truth per step
  [trajectory]
    phi0 = [0.5236, 0, 0]                    initial attitude (rotation vector), rad
    r0 = [1, 1, 1]                           initial position, m
    omega_amp, omega_offset = [x, y, z]      w(t) = omega_amp cos(freq t) + omega_offset, rad/s
    v_amp, v_offset = [x, y, z]              v(t) = v_amp cos(freq t) + v_offset, m/s
    freq = 0.31416                           rad/s
    landmarks = [[1,0,0], [0,1,0], [0,0,1]]  reference points, m
  [noise]
    components = 3                           sinusoids per landmark-noise component
    freq_range = [25.13, 50.27]              rad/s
    amp_range = [0.05, 0.4]
    coef_range = [0.1, 0.2]                  harmonic disturbance coefficients
    bias_range = [-0.5, 0.5]                 constant disturbance
    disturbance_freq = 0.62832               rad/s
    landmark_scale = 1.0                     0 disables landmark noise
  [filter]
    name = \"h1\" | \"h2\" | \"h3\"               preset (default \"h2\")
    num = [9.7], den = [1, 6.2]              custom H(s), descending powers of s
  [disturbance]
    enabled = true | false                   default: true for case 3 only
    freqs = [0.62832]                        internal-model frequencies, rad/s
    bias = true                              include a constant mode
    rho = 0.5                                adaptation gain
    ebar_mode = \"adjoint-star\" | \"conjugation\"
";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Invalid { path: String, line: usize, message: String },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub disturbance: DisturbanceSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub case: Option<CaseName>,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub integrator: Option<IntegratorName>,
    pub velocity_sampling: Option<SamplingName>,
    pub truth_substeps: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub phi0: Option<[f64; 3]>,
    pub r0: Option<[f64; 3]>,
    pub omega_amp: Option<[f64; 3]>,
    pub omega_offset: Option<[f64; 3]>,
    pub v_amp: Option<[f64; 3]>,
    pub v_offset: Option<[f64; 3]>,
    pub freq: Option<f64>,
    pub landmarks: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub components: Option<usize>,
    pub freq_range: Option<(f64, f64)>,
    pub amp_range: Option<(f64, f64)>,
    pub coef_range: Option<(f64, f64)>,
    pub bias_range: Option<(f64, f64)>,
    pub disturbance_freq: Option<f64>,
    pub landmark_scale: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub name: Option<FilterName>,
    pub num: Option<Vec<f64>>,
    pub den: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub enabled: Option<bool>,
    pub freqs: Option<Vec<f64>>,
    pub bias: Option<bool>,
    pub rho: Option<f64>,
    pub ebar_mode: Option<EbarName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
pub enum CaseName {
    #[serde(rename = "1")]
    #[value(name = "1")]
    One,
    #[serde(rename = "2")]
    #[value(name = "2")]
    Two,
    #[serde(rename = "2b")]
    #[value(name = "2b")]
    TwoBias,
    #[serde(rename = "3")]
    #[value(name = "3")]
    Three,
}

impl From<CaseName> for CaseId {
    fn from(c: CaseName) -> Self {
        match c {
            CaseName::One => CaseId::Case1,
            CaseName::Two => CaseId::Case2,
            CaseName::TwoBias => CaseId::Case2Bias,
            CaseName::Three => CaseId::Case3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FilterName {
    H1,
    H2,
    H3,
}

impl From<FilterName> for FilterChoice {
    fn from(f: FilterName) -> Self {
        match f {
            FilterName::H1 => FilterChoice::H1,
            FilterName::H2 => FilterChoice::H2,
            FilterName::H3 => FilterChoice::H3,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegratorName {
    LieSplitting,
    Rk4Project,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingName {
    IntervalMean,
    Instant,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EbarName {
    AdjointStar,
    Conjugation,
}

/// A parsed file together with its source, kept for line lookups.
#[derive(Debug, Default)]
pub struct LoadedConfig {
    pub file: ConfigFile,
    pub path: String,
    source: String,
}

impl LoadedConfig {
    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: display.clone(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &display)
    }

    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Invalid {
            path: path.to_string(),
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().trim().to_string(),
        })?;
        Ok(Self {
            file,
            path: path.to_string(),
            source: text.to_string(),
        })
    }

    fn invalid(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Invalid {
            path: self.path.clone(),
            line: find_key(&self.source, section, key).unwrap_or(1),
            message: format!("[{section}] {key}: {}", message.into()),
        }
    }

    /// Filter named in the file, or `None` when the file does not choose one.
    pub fn filter(&self) -> Result<Option<FilterChoice>, ConfigError> {
        let f = &self.file.filter;
        match (&f.num, &f.den) {
            (Some(num), Some(den)) => {
                if f.name.is_some() {
                    return Err(self.invalid("filter", "name", "give either name or num/den, not both"));
                }
                TransferFunction::new(num, den)
                    .map(|tf| Some(FilterChoice::Custom(tf)))
                    .map_err(|e| self.invalid("filter", "num", e.to_string()))
            }
            (None, None) => Ok(f.name.map(Into::into)),
            (Some(_), None) => Err(self.invalid("filter", "num", "den is missing")),
            (None, Some(_)) => Err(self.invalid("filter", "den", "num is missing")),
        }
    }

    /// Scenario described by the file; `case`, `filter` and `seed` override it.
    pub fn scenario(
        &self,
        case: Option<CaseId>,
        filter: Option<FilterChoice>,
        seed: Option<u64>,
    ) -> Result<ScenarioConfig, ConfigError> {
        let f = &self.file;
        let case = case.or(f.run.case.map(Into::into)).unwrap_or(CaseId::Case1);
        let filter = match filter {
            Some(fc) => fc,
            None => self.filter()?.unwrap_or(FilterChoice::H2),
        };
        let mut cfg = ScenarioConfig::new(case, filter);

        let r = &f.run;
        if let Some(v) = r.duration {
            self.positive("run", "duration", v)?;
            cfg.duration = v;
        }
        if let Some(v) = r.dt {
            self.positive("run", "dt", v)?;
            cfg.dt = v;
        }
        if cfg.duration / cfg.dt > 1e7 {
            return Err(self.invalid("run", "dt", "duration/dt exceeds 1e7 steps"));
        }
        cfg.seed = seed.or(r.seed).unwrap_or(cfg.seed);
        if let Some(i) = r.integrator {
            cfg.integrator = match i {
                IntegratorName::LieSplitting => Integrator::LieSplitting,
                IntegratorName::Rk4Project => Integrator::Rk4Project,
            };
        }
        if let Some(s) = r.velocity_sampling {
            cfg.velocity_sampling = match s {
                SamplingName::IntervalMean => VelocitySampling::IntervalMean,
                SamplingName::Instant => VelocitySampling::Instant,
            };
        }
        if let Some(n) = r.truth_substeps {
            if n == 0 {
                return Err(self.invalid("run", "truth_substeps", "must be at least 1"));
            }
            cfg.truth_substeps = n;
        }

        let t = &f.trajectory;
        let tr = &mut cfg.trajectory;
        let vec3 = |a: [f64; 3]| Vector3::from(a);
        if let Some(v) = t.phi0 {
            if vec3(v).norm() >= std::f64::consts::PI {
                return Err(self.invalid("trajectory", "phi0", "rotation angle must be below pi"));
            }
            tr.phi0 = vec3(v);
        }
        for (given, slot) in [
            (t.r0, &mut tr.r0),
            (t.omega_amp, &mut tr.omega_amp),
            (t.omega_offset, &mut tr.omega_offset),
            (t.v_amp, &mut tr.v_amp),
            (t.v_offset, &mut tr.v_offset),
        ] {
            if let Some(v) = given {
                *slot = vec3(v);
            }
        }
        if let Some(v) = t.freq {
            tr.freq = v;
        }
        if let Some(l) = &t.landmarks {
            cfg.landmarks = l.iter().map(|p| vec3(*p)).collect();
        }

        let n = &f.noise;
        let np = &mut cfg.noise;
        if let Some(v) = n.components {
            np.components = v;
        }
        for (key, given, slot) in [
            ("freq_range", n.freq_range, &mut np.freq_range),
            ("amp_range", n.amp_range, &mut np.amp_range),
            ("coef_range", n.coef_range, &mut np.coef_range),
            ("bias_range", n.bias_range, &mut np.bias_range),
        ] {
            if let Some((lo, hi)) = given {
                if !(lo <= hi) {
                    return Err(self.invalid("noise", key, "lower bound exceeds upper bound"));
                }
                *slot = (lo, hi);
            }
        }
        if let Some(v) = n.disturbance_freq {
            self.positive("noise", "disturbance_freq", v)?;
            np.disturbance_freq = v;
        }
        if let Some(v) = n.landmark_scale {
            if !(v >= 0.0) {
                return Err(self.invalid("noise", "landmark_scale", "must be nonnegative"));
            }
            np.landmark_scale = v;
        }

        let d = &f.disturbance;
        let enabled = d.enabled.unwrap_or(case == CaseId::Case3);
        cfg.disturbance = if enabled {
            let mut dc = DisturbanceConfig::default();
            if let Some(fr) = &d.freqs {
                if fr.iter().any(|w| !(*w > 0.0)) {
                    return Err(self.invalid("disturbance", "freqs", "frequencies must be positive"));
                }
                dc.freqs = fr.clone();
            }
            if let Some(b) = d.bias {
                dc.bias = b;
            }
            if let Some(rho) = d.rho {
                if !(rho >= 0.0) {
                    return Err(self.invalid("disturbance", "rho", "must be nonnegative"));
                }
                dc.rho = rho;
            }
            if dc.freqs.is_empty() && !dc.bias {
                return Err(self.invalid("disturbance", "freqs", "model has no modes"));
            }
            Some(dc)
        } else {
            None
        };
        if let Some(m) = d.ebar_mode {
            cfg.ebar_mode = match m {
                EbarName::AdjointStar => EbarMode::AdjointStar,
                EbarName::Conjugation => EbarMode::Conjugation,
            };
        }
        Ok(cfg)
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<(), ConfigError> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(self.invalid(section, key, format!("must be positive, got {v}")))
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = …` inside `[section]`, if present.
fn find_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section {
            if let Some((k, _)) = l.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = LoadedConfig::parse("", "x").unwrap();
        let s = c.scenario(None, None, None).unwrap();
        assert_eq!(s, ScenarioConfig::new(CaseId::Case1, FilterChoice::H2));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = LoadedConfig::parse("[run]\nseed = 1\ndt = = 2\n", "cfg.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("cfg.toml:3:"), "{msg}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = LoadedConfig::parse("[noise]\ncomponents = 3\nwobble = 1\n", "c").unwrap_err();
        assert!(err.to_string().starts_with("c:3:"), "{err}");
    }

    #[test]
    fn invalid_value_reports_line() {
        let c = LoadedConfig::parse("[run]\nseed = 1\n\ndt = -0.1\n", "c").unwrap();
        let err = c.scenario(None, None, None).unwrap_err();
        assert!(err.to_string().starts_with("c:4: [run] dt"), "{err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let c = LoadedConfig::parse("[run]\ncase = \"2\"\nseed = 5\n[filter]\nname = \"h1\"\n", "c").unwrap();
        let s = c.scenario(Some(CaseId::Case3), Some(FilterChoice::H3), Some(9)).unwrap();
        assert_eq!((s.case, s.filter, s.seed), (CaseId::Case3, FilterChoice::H3, 9));
        assert!(s.disturbance.is_some());
        let s = c.scenario(None, None, None).unwrap();
        assert_eq!((s.case, s.filter, s.seed), (CaseId::Case2, FilterChoice::H1, 5));
        assert!(s.disturbance.is_none());
    }

    #[test]
    fn custom_filter() {
        let c = LoadedConfig::parse("[filter]\nnum = [9.7]\nden = [1, 6.2]\n", "c").unwrap();
        let f = c.filter().unwrap().unwrap();
        assert_eq!(
            f.transfer_function().unwrap(),
            FilterChoice::H2.transfer_function().unwrap()
        );
        let c = LoadedConfig::parse("[filter]\nnum = [1, 0, 0]\nden = [1, 1]\n", "c").unwrap();
        assert!(c.filter().is_err());
    }

    #[test]
    fn every_key_is_documented() {
        for key in [
            "case", "duration", "dt", "seed", "integrator", "velocity_sampling", "truth_substeps", "phi0",
            "r0", "omega_amp", "omega_offset", "v_amp", "v_offset", "freq", "landmarks", "components",
            "freq_range", "amp_range", "coef_range", "bias_range", "disturbance_freq", "landmark_scale",
            "name", "num", "den", "enabled", "freqs", "bias", "rho", "ebar_mode",
        ] {
            assert!(CONFIG_KEYS.contains(key), "{key}");
        }
    }
}
