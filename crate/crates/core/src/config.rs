//! Plain-text run configuration.
//!
//! Grammar: one `section.key = value` assignment per line, `#` starts a
//! comment, blank lines are skipped. Values are either keywords (for
//! `run.experiment`, `pulses.family`, `integrator.method`), integers, or
//! numbers with a unit suffix. Dimensionful numbers require their unit:
//! rates take `MHz_2pi` (multiplied by 2pi into rad/us) or `rad_per_us`,
//! times take `us`. Dimensionless numbers must be bare. Unknown keys are
//! errors -- typos never silently vanish.

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dynamics::{Method, PropagatorConfig};
use crate::hilbert::DecoherenceParams;
use crate::pulses::{GaussianParams, StaParams, StirapParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `section.key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    BadValue {
        line: usize,
        key: String,
        expected: String,
        value: String,
    },
    #[error("line {line}: `{key}` is dimensionful and needs a unit suffix ({units}); bare numbers are ambiguous")]
    MissingUnit {
        line: usize,
        key: String,
        units: &'static str,
    },
    #[error("`{key}` = {value} rejected: {reason}")]
    OutOfRange {
        key: String,
        value: f64,
        reason: String,
    },
    #[error("no experiment selected: set `run.experiment` or name a subcommand")]
    NoExperiment,
}

/// Experiment selector, one runner per id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    ScanEpsilon,
    Populations,
    FitGaussian,
    Robustness,
    Decoherence,
    CesiumCheck,
    VerifyInvariant,
    PulsesDump,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::ScanEpsilon,
        Experiment::Populations,
        Experiment::FitGaussian,
        Experiment::Robustness,
        Experiment::Decoherence,
        Experiment::CesiumCheck,
        Experiment::VerifyInvariant,
        Experiment::PulsesDump,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Experiment::ScanEpsilon => "scan-epsilon",
            Experiment::Populations => "populations",
            Experiment::FitGaussian => "fit-gaussian",
            Experiment::Robustness => "robustness",
            Experiment::Decoherence => "decoherence",
            Experiment::CesiumCheck => "cesium-check",
            Experiment::VerifyInvariant => "verify-invariant",
            Experiment::PulsesDump => "pulses-dump",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|e| e.id() == id)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Scan axis settings for the fidelity-vs-epsilon sweep.
#[derive(Clone, Copy, Debug)]
pub struct ScanSettings {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

/// Fluctuation-grid settings.
#[derive(Clone, Copy, Debug)]
pub struct RobustnessSettings {
    pub amp_range: f64,
    pub width_range: f64,
    pub steps: usize,
}

/// Decay-ratio grid settings.
#[derive(Clone, Copy, Debug)]
pub struct GridSettings {
    pub gamma_over_g_max: f64,
    pub kappa_over_g_max: f64,
    pub steps: usize,
}

/// Residual-table settings for the invariant diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct InvariantSettings {
    pub rows: usize,
    pub quad_steps: usize,
}

/// Fully validated run configuration; every physical parameter has already
/// passed its owning module's invariants.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub out_dir: PathBuf,
    pub pulse_family: String,
    pub sta: StaParams,
    pub gauss: GaussianParams,
    pub stirap: StirapParams,
    pub dec: DecoherenceParams,
    /// Explicit integrator override; `None` keeps the per-runner defaults
    /// (adaptive 1e-10 for pure states, fixed window/4000 for density
    /// matrices).
    pub integrator_method: Option<Method>,
    pub integrator_samples: Option<usize>,
    pub scan: ScanSettings,
    pub robustness: RobustnessSettings,
    pub grid: GridSettings,
    pub invariant: InvariantSettings,
}

impl RunConfig {
    /// Propagator for a trajectory runner over a window of `window_us`.
    pub fn propagator_for(&self, window_us: f64, closed: bool) -> PropagatorConfig {
        let method = self.integrator_method.unwrap_or(if closed {
            Method::Adaptive { tol: 1e-10 }
        } else {
            Method::FixedStep {
                step: window_us / 4000.0,
            }
        });
        PropagatorConfig {
            method,
            sample_count: self.integrator_samples.unwrap_or(501),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            out_dir: PathBuf::from("output"),
            pulse_family: "sta_sinusoidal".to_owned(),
            sta: StaParams::default(),
            gauss: GaussianParams::default(),
            stirap: StirapParams::default(),
            dec: DecoherenceParams::closed(),
            integrator_method: None,
            integrator_samples: None,
            scan: ScanSettings {
                lo: 0.03,
                hi: 0.20,
                samples: 400,
            },
            robustness: RobustnessSettings {
                amp_range: 0.10,
                width_range: 0.10,
                steps: 11,
            },
            grid: GridSettings {
                gamma_over_g_max: 0.1,
                kappa_over_g_max: 0.1,
                steps: 11,
            },
            invariant: InvariantSettings {
                rows: 11,
                quad_steps: 256,
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Rate,
    Time,
    Dimensionless,
    Integer,
    Keyword,
}

const KEYS: &[(&str, Kind)] = &[
    ("run.experiment", Kind::Keyword),
    ("run.out_dir", Kind::Keyword),
    ("pulses.family", Kind::Keyword),
    ("pulses.epsilon", Kind::Dimensionless),
    ("pulses.t_f", Kind::Time),
    ("pulses.delta_t", Kind::Time),
    ("pulses.eps_prime", Kind::Rate),
    ("pulses.sigma", Kind::Time),
    ("stirap.t_a", Kind::Time),
    ("stirap.w_c", Kind::Time),
    ("stirap.w_l", Kind::Time),
    ("stirap.d", Kind::Time),
    ("stirap.g_peak", Kind::Rate),
    ("stirap.omega_peak", Kind::Rate),
    ("decoherence.kappa", Kind::Rate),
    ("decoherence.gamma", Kind::Rate),
    ("integrator.method", Kind::Keyword),
    ("integrator.tol", Kind::Dimensionless),
    ("integrator.step", Kind::Time),
    ("integrator.samples", Kind::Integer),
    ("scan.lo", Kind::Dimensionless),
    ("scan.hi", Kind::Dimensionless),
    ("scan.samples", Kind::Integer),
    ("robustness.amp_range", Kind::Dimensionless),
    ("robustness.width_range", Kind::Dimensionless),
    ("robustness.steps", Kind::Integer),
    ("grid.gamma_over_g_max", Kind::Dimensionless),
    ("grid.kappa_over_g_max", Kind::Dimensionless),
    ("grid.steps", Kind::Integer),
    ("invariant.rows", Kind::Integer),
    ("invariant.quad_steps", Kind::Integer),
];

struct RawEntry {
    line: usize,
    value: String,
}

fn parse_number(line: usize, key: &str, kind: Kind, value: &str) -> Result<f64, ConfigError> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    let bad = |expected: &str| ConfigError::BadValue {
        line,
        key: key.to_owned(),
        expected: expected.to_owned(),
        value: value.to_owned(),
    };
    match kind {
        Kind::Rate => match tokens.as_slice() {
            [num, unit] => {
                let x: f64 = num.parse().map_err(|_| bad("a number with a rate unit"))?;
                match *unit {
                    "MHz_2pi" => Ok(crate::units::mhz_2pi_to_rad_per_us(x)),
                    "rad_per_us" => Ok(x),
                    _ => Err(bad("unit MHz_2pi or rad_per_us")),
                }
            }
            [_] => Err(ConfigError::MissingUnit {
                line,
                key: key.to_owned(),
                units: "MHz_2pi, rad_per_us",
            }),
            _ => Err(bad("a number with a rate unit")),
        },
        Kind::Time => match tokens.as_slice() {
            [num, "us"] => num.parse().map_err(|_| bad("a number with unit us")),
            [_] => Err(ConfigError::MissingUnit {
                line,
                key: key.to_owned(),
                units: "us",
            }),
            _ => Err(bad("a number with unit us")),
        },
        Kind::Dimensionless => match tokens.as_slice() {
            [num] => num.parse().map_err(|_| bad("a bare number")),
            _ => Err(bad("a bare number (dimensionless)")),
        },
        _ => unreachable!("parse_number only handles numeric kinds"),
    }
}

/// Parse and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config_str(&text)
}

/// Parse and validate configuration text (the file-less entry point used by
/// tests and by CLI subcommands without a config).
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: Vec<(String, RawEntry)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let stripped = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax {
                line,
                text: stripped.to_owned(),
            })?;
        let key = key.trim().to_owned();
        let value = value.trim().to_owned();
        if key.is_empty() || value.is_empty() || key.matches('.').count() != 1 {
            return Err(ConfigError::Syntax {
                line,
                text: stripped.to_owned(),
            });
        }
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if entries.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::DuplicateKey { line, key });
        }
        entries.push((key, RawEntry { line, value }));
    }

    let mut cfg = RunConfig::default();
    let mut integrator_method: Option<String> = None;
    let mut integrator_tol: Option<f64> = None;
    let mut integrator_step: Option<f64> = None;
    let mut integrator_samples: Option<usize> = None;

    let out_of_range = |key: &str, value: f64, reason: String| ConfigError::OutOfRange {
        key: key.to_owned(),
        value,
        reason,
    };

    for (key, entry) in &entries {
        let kind = KEYS
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, kind)| *kind)
            .expect("key already validated");
        let line = entry.line;
        let value = entry.value.as_str();
        match (key.as_str(), kind) {
            ("run.experiment", _) => {
                cfg.experiment =
                    Some(
                        Experiment::from_id(value).ok_or_else(|| ConfigError::BadValue {
                            line,
                            key: key.clone(),
                            expected: format!(
                                "one of {}",
                                Experiment::ALL.map(|e| e.id()).join(", ")
                            ),
                            value: value.to_owned(),
                        })?,
                    );
            }
            ("run.out_dir", _) => cfg.out_dir = PathBuf::from(value),
            ("pulses.family", _) => {
                if !["sta_sinusoidal", "sta_gaussian", "stirap"].contains(&value) {
                    return Err(ConfigError::BadValue {
                        line,
                        key: key.clone(),
                        expected: "one of sta_sinusoidal, sta_gaussian, stirap".to_owned(),
                        value: value.to_owned(),
                    });
                }
                cfg.pulse_family = value.to_owned();
            }
            ("integrator.method", _) => {
                if !["adaptive", "fixed"].contains(&value) {
                    return Err(ConfigError::BadValue {
                        line,
                        key: key.clone(),
                        expected: "adaptive or fixed".to_owned(),
                        value: value.to_owned(),
                    });
                }
                integrator_method = Some(value.to_owned());
            }
            (_, Kind::Integer) => {
                let n: usize = value.parse().map_err(|_| ConfigError::BadValue {
                    line,
                    key: key.clone(),
                    expected: "a positive integer".to_owned(),
                    value: value.to_owned(),
                })?;
                match key.as_str() {
                    "integrator.samples" => integrator_samples = Some(n),
                    "scan.samples" => cfg.scan.samples = n,
                    "robustness.steps" => cfg.robustness.steps = n,
                    "grid.steps" => cfg.grid.steps = n,
                    "invariant.rows" => cfg.invariant.rows = n,
                    "invariant.quad_steps" => cfg.invariant.quad_steps = n,
                    _ => unreachable!(),
                }
            }
            (_, kind) => {
                let x = parse_number(line, key, kind, value)?;
                match key.as_str() {
                    "pulses.epsilon" => cfg.sta.epsilon = x,
                    "pulses.t_f" => cfg.sta.t_f = x,
                    "pulses.delta_t" => {
                        cfg.sta.delta_t = x;
                        cfg.gauss.delta_t = x;
                    }
                    "pulses.eps_prime" => cfg.gauss.eps_prime = x,
                    "pulses.sigma" => cfg.gauss.sigma = x,
                    "stirap.t_a" => cfg.stirap.t_a = x,
                    "stirap.w_c" => cfg.stirap.w_c = x,
                    "stirap.w_l" => cfg.stirap.w_l = x,
                    "stirap.d" => cfg.stirap.d = x,
                    "stirap.g_peak" => cfg.stirap.g_peak = x,
                    "stirap.omega_peak" => cfg.stirap.omega_peak = x,
                    "decoherence.kappa" => cfg.dec.kappa = x,
                    "decoherence.gamma" => cfg.dec.gamma = x,
                    "integrator.tol" => integrator_tol = Some(x),
                    "integrator.step" => integrator_step = Some(x),
                    "scan.lo" => cfg.scan.lo = x,
                    "scan.hi" => cfg.scan.hi = x,
                    "robustness.amp_range" => cfg.robustness.amp_range = x,
                    "robustness.width_range" => cfg.robustness.width_range = x,
                    "grid.gamma_over_g_max" => cfg.grid.gamma_over_g_max = x,
                    "grid.kappa_over_g_max" => cfg.grid.kappa_over_g_max = x,
                    _ => unreachable!(),
                }
            }
        }
    }

    // fail fast: every physical parameter re-passes its module invariants
    cfg.sta = StaParams::new(cfg.sta.epsilon, cfg.sta.t_f, cfg.sta.delta_t)
        .map_err(|e| out_of_range("pulses.epsilon/t_f/delta_t", cfg.sta.epsilon, e.to_string()))?;
    cfg.gauss = GaussianParams::new(cfg.gauss.eps_prime, cfg.gauss.sigma, cfg.gauss.delta_t)
        .map_err(|e| out_of_range("pulses.eps_prime/sigma", cfg.gauss.eps_prime, e.to_string()))?;
    cfg.stirap = StirapParams::new(
        cfg.stirap.t_a,
        cfg.stirap.w_c,
        cfg.stirap.w_l,
        cfg.stirap.g_peak,
        cfg.stirap.omega_peak,
        cfg.stirap.d,
    )
    .map_err(|e| out_of_range("stirap.*", cfg.stirap.t_a, e.to_string()))?;
    cfg.dec = DecoherenceParams::new(cfg.dec.kappa, cfg.dec.gamma)
        .map_err(|e| out_of_range("decoherence.*", cfg.dec.kappa, e.to_string()))?;

    cfg.integrator_method = match integrator_method.as_deref() {
        Some("fixed") => {
            let step = integrator_step.unwrap_or(cfg.sta.t_f / 4000.0);
            if !(step.is_finite() && step > 0.0) {
                return Err(out_of_range(
                    "integrator.step",
                    step,
                    "must be positive".to_owned(),
                ));
            }
            Some(Method::FixedStep { step })
        }
        Some("adaptive") => {
            let tol = integrator_tol.unwrap_or(1e-10);
            if !(tol > 1e-14 && tol < 1e-4) {
                return Err(out_of_range(
                    "integrator.tol",
                    tol,
                    "must lie in (1e-14, 1e-4)".to_owned(),
                ));
            }
            Some(Method::Adaptive { tol })
        }
        None => {
            if let Some(tol) = integrator_tol {
                if !(tol > 1e-14 && tol < 1e-4) {
                    return Err(out_of_range(
                        "integrator.tol",
                        tol,
                        "must lie in (1e-14, 1e-4)".to_owned(),
                    ));
                }
                Some(Method::Adaptive { tol })
            } else {
                None
            }
        }
        _ => unreachable!(),
    };
    cfg.integrator_samples = integrator_samples;

    // sweep windows
    if !(cfg.scan.lo > 0.0
        && cfg.scan.hi > cfg.scan.lo
        && cfg.scan.hi < std::f64::consts::FRAC_PI_2)
    {
        return Err(out_of_range(
            "scan.lo/scan.hi",
            cfg.scan.lo,
            "must satisfy 0 < lo < hi < pi/2".to_owned(),
        ));
    }
    Ok(cfg)
}
