//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clm_core::linear::Parity;
use clm_core::{GaugeChoice, ModelKind};
use thiserror::Error;

/// Largest accepted `dt · N`.
pub const CFL_BOUND: f64 = 2.0;

/// Largest perturbation size accepted by the stability experiments.
pub const MAX_STABILITY_EPS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}")]
    InvalidValue { key: String, value: String },
    #[error("invalid initial-data descriptor {0:?}")]
    InvalidInit(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Conservation,
    GroundStability,
    ShiftedGroundStability,
    ExcitedLinear,
    LinearDecay,
    OracleCheck,
    SqrtScheme,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Conservation,
        Experiment::GroundStability,
        Experiment::ShiftedGroundStability,
        Experiment::ExcitedLinear,
        Experiment::LinearDecay,
        Experiment::OracleCheck,
        Experiment::SqrtScheme,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Conservation => "conservation",
            Experiment::GroundStability => "ground_stability",
            Experiment::ShiftedGroundStability => "shifted_ground_stability",
            Experiment::ExcitedLinear => "excited_linear",
            Experiment::LinearDecay => "linear_decay",
            Experiment::OracleCheck => "oracle_check",
            Experiment::SqrtScheme => "sqrt_scheme",
        }
    }
}

impl FromStr for Experiment {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == key || e.name().replace('_', "") == key)
            .ok_or_else(|| ConfigError::InvalidValue {
                key: "experiment".into(),
                value: s.into(),
            })
    }
}

/// Named initial datum with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum InitDescriptor {
    /// `exp(-1/(1 - (θ/a)²))` on `|θ| < a`.
    Bump { a: f64 },
    /// `-sin θ + η` with `‖η‖_𝓗DW = eps`.
    GroundPerturb {
        eps: f64,
        seed: u64,
        mean_zero: bool,
    },
    /// `-sin θ + η - α(cos θ - 1)` with `η` mean-zero and `‖η‖_𝓗DW = eps`.
    ShiftedGround { eps: f64, seed: u64, alpha: f64 },
    /// `-sin 2θ + η` with `η` of one parity and `‖η‖_{L²}/√π = eps`.
    ExcitedPerturb { eps: f64, parity: Parity, seed: u64 },
}

impl InitDescriptor {
    pub fn eps(&self) -> Option<f64> {
        match self {
            InitDescriptor::Bump { .. } => None,
            InitDescriptor::GroundPerturb { eps, .. }
            | InitDescriptor::ShiftedGround { eps, .. }
            | InitDescriptor::ExcitedPerturb { eps, .. } => Some(*eps),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            InitDescriptor::Bump { .. } => None,
            InitDescriptor::GroundPerturb { seed, .. }
            | InitDescriptor::ShiftedGround { seed, .. }
            | InitDescriptor::ExcitedPerturb { seed, .. } => Some(*seed),
        }
    }

    pub fn with_eps(mut self, value: f64) -> Self {
        match &mut self {
            InitDescriptor::Bump { .. } => {}
            InitDescriptor::GroundPerturb { eps, .. }
            | InitDescriptor::ShiftedGround { eps, .. }
            | InitDescriptor::ExcitedPerturb { eps, .. } => *eps = value,
        }
        self
    }

    pub fn with_seed(mut self, value: u64) -> Self {
        match &mut self {
            InitDescriptor::Bump { .. } => {}
            InitDescriptor::GroundPerturb { seed, .. }
            | InitDescriptor::ShiftedGround { seed, .. }
            | InitDescriptor::ExcitedPerturb { seed, .. } => *seed = value,
        }
        self
    }
}

impl fmt::Display for InitDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitDescriptor::Bump { a } => write!(f, "bump(a={a})"),
            InitDescriptor::GroundPerturb {
                eps,
                seed,
                mean_zero,
            } => {
                write!(
                    f,
                    "ground_perturb(eps={eps},seed={seed},mean_zero={mean_zero})"
                )
            }
            InitDescriptor::ShiftedGround { eps, seed, alpha } => {
                write!(f, "shifted_ground(eps={eps},seed={seed},alpha={alpha})")
            }
            InitDescriptor::ExcitedPerturb { eps, parity, seed } => {
                let p = match parity {
                    Parity::Odd => "odd",
                    Parity::Even => "even",
                };
                write!(f, "excited_perturb(eps={eps},parity={p},seed={seed})")
            }
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::InvalidValue {
        key: key.into(),
        value: value.into(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            key: key.into(),
            value: value.into(),
        }),
    }
}

fn parse_parity(value: &str) -> Result<Parity, ConfigError> {
    match value.trim() {
        "odd" => Ok(Parity::Odd),
        "even" => Ok(Parity::Even),
        _ => Err(ConfigError::InvalidValue {
            key: "parity".into(),
            value: value.into(),
        }),
    }
}

impl FromStr for InitDescriptor {
    type Err = ConfigError;

    /// `name(key=value, ...)`; omitted parameters take their defaults.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ConfigError::InvalidInit(s.into());
        let (name, args) = match s.find('(') {
            Some(i) => {
                let rest = s[i + 1..].strip_suffix(')').ok_or_else(bad)?;
                (&s[..i], rest)
            }
            None => (s, ""),
        };
        let mut params = Vec::new();
        for part in args.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            params.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |k: &str| {
            params
                .iter()
                .find(|(pk, _)| pk == k)
                .map(|(_, v)| v.as_str())
        };
        let known: &[&str] = match name.trim() {
            "bump" => &["a"],
            "ground_perturb" => &["eps", "seed", "mean_zero"],
            "shifted_ground" => &["eps", "seed", "alpha"],
            "excited_perturb" => &["eps", "parity", "seed"],
            _ => return Err(bad()),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey(k.clone()));
        }
        let eps = get("eps")
            .map(|v| parse_num("eps", v))
            .transpose()?
            .unwrap_or(0.01);
        let seed = get("seed")
            .map(|v| parse_num("seed", v))
            .transpose()?
            .unwrap_or(0);
        Ok(match name.trim() {
            "bump" => InitDescriptor::Bump {
                a: get("a")
                    .map(|v| parse_num("a", v))
                    .transpose()?
                    .unwrap_or(2.0),
            },
            "ground_perturb" => InitDescriptor::GroundPerturb {
                eps,
                seed,
                mean_zero: get("mean_zero")
                    .map(|v| parse_bool("mean_zero", v))
                    .transpose()?
                    .unwrap_or(true),
            },
            "shifted_ground" => InitDescriptor::ShiftedGround {
                eps,
                seed,
                alpha: get("alpha")
                    .map(|v| parse_num("alpha", v))
                    .transpose()?
                    .unwrap_or(0.02),
            },
            _ => InitDescriptor::ExcitedPerturb {
                eps,
                parity: get("parity")
                    .map(parse_parity)
                    .transpose()?
                    .unwrap_or(Parity::Even),
                seed,
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub experiment: Experiment,
    /// Fourier order of nonlinear runs, truncation `K` of linear ones.
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub gauge: GaugeChoice,
    pub init: InitDescriptor,
    pub output_dir: Option<PathBuf>,
    pub sample_every: usize,
    /// Random vectors per parity in [`Experiment::LinearDecay`].
    pub samples: usize,
    /// Start of the fitting window for decay rates.
    pub transient: f64,
}

impl ExperimentConfig {
    /// The settings used by the acceptance suite.
    pub fn preset(experiment: Experiment) -> Self {
        let base = ExperimentConfig {
            model: ModelKind::DeGregorio,
            experiment,
            n: 256,
            dt: 1e-3,
            t_final: 20.0,
            gauge: GaugeChoice::VanishAtZero,
            init: InitDescriptor::Bump { a: 2.0 },
            output_dir: None,
            sample_every: 100,
            samples: 100,
            transient: 1.0,
        };
        match experiment {
            Experiment::Conservation => ExperimentConfig {
                t_final: 10.0,
                gauge: GaugeChoice::MeanZero,
                ..base
            },
            Experiment::GroundStability => ExperimentConfig {
                init: InitDescriptor::GroundPerturb {
                    eps: 0.01,
                    seed: 1,
                    mean_zero: true,
                },
                ..base
            },
            Experiment::ShiftedGroundStability => ExperimentConfig {
                init: InitDescriptor::ShiftedGround {
                    eps: 0.01,
                    seed: 2,
                    alpha: 0.02,
                },
                ..base
            },
            Experiment::ExcitedLinear => ExperimentConfig {
                dt: 2e-3,
                gauge: GaugeChoice::MeanZero,
                init: InitDescriptor::ExcitedPerturb {
                    eps: 0.01,
                    parity: Parity::Even,
                    seed: 3,
                },
                sample_every: 10,
                ..base
            },
            Experiment::LinearDecay => ExperimentConfig {
                dt: 5e-3,
                init: InitDescriptor::GroundPerturb {
                    eps: 0.01,
                    seed: 5,
                    mean_zero: true,
                },
                sample_every: 20,
                ..base
            },
            Experiment::OracleCheck => ExperimentConfig {
                n: 40,
                t_final: 0.0,
                ..base
            },
            Experiment::SqrtScheme => ExperimentConfig {
                t_final: 0.5,
                gauge: GaugeChoice::MeanZero,
                sample_every: 50,
                ..base
            },
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "model" => {
                self.model = match value
                    .trim()
                    .to_ascii_lowercase()
                    .replace(['-', '_'], "")
                    .as_str()
                {
                    "degregorio" | "dg" => ModelKind::DeGregorio,
                    "clm" => ModelKind::Clm,
                    _ => {
                        return Err(ConfigError::InvalidValue {
                            key: key.into(),
                            value: value.into(),
                        })
                    }
                }
            }
            "experiment" => self.experiment = value.parse()?,
            "N" | "n" => self.n = parse_num(key, value)?,
            "dt" => self.dt = parse_num(key, value)?,
            "T" | "t_final" => self.t_final = parse_num(key, value)?,
            "gauge" => {
                self.gauge = match value
                    .trim()
                    .to_ascii_lowercase()
                    .replace(['-', '_'], "")
                    .as_str()
                {
                    "meanzero" => GaugeChoice::MeanZero,
                    "vanishatzero" => GaugeChoice::VanishAtZero,
                    _ => {
                        return Err(ConfigError::InvalidValue {
                            key: key.into(),
                            value: value.into(),
                        })
                    }
                }
            }
            "init" => self.init = value.parse()?,
            "output_dir" => self.output_dir = Some(PathBuf::from(value.trim())),
            "sample_every" => self.sample_every = parse_num(key, value)?,
            "samples" => self.samples = parse_num(key, value)?,
            "transient" => self.transient = parse_num(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Parses a config file on top of the preset of its `experiment` key.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.into(),
            })?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let experiment = pairs
            .iter()
            .find(|(k, _)| k == "experiment")
            .map(|(_, v)| v.parse())
            .transpose()?
            .ok_or_else(|| ConfigError::Invalid("missing `experiment`".into()))?;
        let mut cfg = ExperimentConfig::preset(experiment);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Flat `key = value` rendering; [`ExperimentConfig::parse`] reads it back.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("experiment".to_string(), self.experiment.name().to_string()),
            (
                "model".into(),
                match self.model {
                    ModelKind::DeGregorio => "degregorio",
                    ModelKind::Clm => "clm",
                }
                .into(),
            ),
            ("N".into(), self.n.to_string()),
            ("dt".into(), self.dt.to_string()),
            ("T".into(), self.t_final.to_string()),
            (
                "gauge".into(),
                match self.gauge {
                    GaugeChoice::MeanZero => "mean_zero",
                    GaugeChoice::VanishAtZero => "vanish_at_zero",
                }
                .into(),
            ),
            ("init".into(), self.init.to_string()),
            ("sample_every".into(), self.sample_every.to_string()),
            ("samples".into(), self.samples.to_string()),
            ("transient".into(), self.transient.to_string()),
        ];
        if let Some(dir) = &self.output_dir {
            out.push(("output_dir".into(), dir.display().to_string()));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.n == 0 {
            return invalid("N must be positive".into());
        }
        if self.experiment != Experiment::OracleCheck {
            if !(self.dt > 0.0 && self.t_final > 0.0) {
                return invalid(format!(
                    "need dt > 0 and T > 0, got dt = {}, T = {}",
                    self.dt, self.t_final
                ));
            }
            if self.dt * self.n as f64 > CFL_BOUND {
                return invalid(format!(
                    "dt·N = {} exceeds the CFL bound {CFL_BOUND}",
                    self.dt * self.n as f64
                ));
            }
        }
        if self.sample_every == 0 {
            return invalid("sample_every must be positive".into());
        }
        let stability = matches!(
            self.experiment,
            Experiment::GroundStability
                | Experiment::ShiftedGroundStability
                | Experiment::ExcitedLinear
        );
        if let Some(eps) = self.init.eps() {
            if stability && !(eps > 0.0 && eps <= MAX_STABILITY_EPS) {
                return invalid(format!("eps = {eps} is outside (0, {MAX_STABILITY_EPS}]"));
            }
        }
        let init_fits = match self.experiment {
            Experiment::Conservation | Experiment::SqrtScheme => {
                matches!(self.init, InitDescriptor::Bump { .. })
            }
            Experiment::GroundStability | Experiment::LinearDecay => {
                matches!(self.init, InitDescriptor::GroundPerturb { .. })
            }
            Experiment::ShiftedGroundStability => {
                matches!(self.init, InitDescriptor::ShiftedGround { .. })
            }
            Experiment::ExcitedLinear => matches!(self.init, InitDescriptor::ExcitedPerturb { .. }),
            Experiment::OracleCheck => true,
        };
        if !init_fits {
            return invalid(format!(
                "init {} does not fit experiment {}",
                self.init,
                self.experiment.name()
            ));
        }
        Ok(())
    }
}
