//! Experiment manifests.
//!
//! A manifest is a flat TOML document; every key is optional except `system`:
//!
//! ```toml
//! system = "growth"
//! noise = "laplace"
//! trials = 100
//! horizon = 100
//! base_seed = 0
//! filters = ["ekf", "ukf", "iekf", "plf", "nano"]
//! out_dir = "results/growth-laplace"
//!
//! [nano]
//! step_size = 1.0
//! stop_criterion = "kl"
//! stop_threshold = 1e-8
//! max_update_iters = 10
//! predict_rule = "van_der_merwe"
//! update_rule = "julier"
//! init = "laplace_ekf"
//! residual_weighting = "inverse_r"
//! integrator = { gauss_hermite = { points = 4 } }
//! max_backtracks = 0
//! on_indefinite = "diverge"
//!
//! [iekf]
//! max_iter = 10
//! tol = 1e-6
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nano_filter::baseline::{DEFAULT_IEKF_TOL, DEFAULT_MAX_ITER, DEFAULT_PLF_TOL};
use nano_filter::models::{make_system, Benchmark, NoiseCase, SystemName};
use nano_filter::nano::{IndefinitePolicy, InitStrategy, ResidualWeighting};
use nano_filter::{FilterKind, Lambda, NanoConfig, SigmaPointRule, StopCriterion, UpdateIntegrator};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_HORIZON: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleSpec {
    Named(NamedRule),
    Custom {
        alpha: f64,
        beta: f64,
        /// Omitted means `λ = 3 − n`.
        lambda: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedRule {
    Julier,
    VanDerMerwe,
}

impl RuleSpec {
    pub fn rule(&self) -> SigmaPointRule {
        match *self {
            RuleSpec::Named(NamedRule::Julier) => SigmaPointRule::julier(),
            RuleSpec::Named(NamedRule::VanDerMerwe) => SigmaPointRule::van_der_merwe(),
            RuleSpec::Custom { alpha, beta, lambda } => SigmaPointRule::new(
                alpha,
                beta,
                lambda.map_or(Lambda::ThreeMinusDim, Lambda::Fixed),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopSpec {
    Kl,
    CovNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    Prior,
    LaplaceEkf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingSpec {
    Identity,
    InverseR,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndefiniteSpec {
    Diverge,
    Retract,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorSpec {
    SigmaPoints,
    GaussHermite { points: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NanoSettings {
    pub step_size: f64,
    pub stop_criterion: StopSpec,
    pub stop_threshold: f64,
    pub max_update_iters: usize,
    pub predict_rule: RuleSpec,
    pub update_rule: RuleSpec,
    pub init: InitSpec,
    pub residual_weighting: WeightingSpec,
    pub integrator: IntegratorSpec,
    pub max_backtracks: usize,
    pub on_indefinite: IndefiniteSpec,
}

impl Default for NanoSettings {
    fn default() -> Self {
        let cfg = NanoConfig::default();
        NanoSettings {
            step_size: cfg.step_size,
            stop_criterion: StopSpec::Kl,
            stop_threshold: cfg.stop_threshold,
            max_update_iters: cfg.max_update_iters,
            predict_rule: RuleSpec::Named(NamedRule::VanDerMerwe),
            update_rule: RuleSpec::Named(NamedRule::Julier),
            init: InitSpec::LaplaceEkf,
            residual_weighting: WeightingSpec::InverseR,
            integrator: IntegratorSpec::GaussHermite { points: 4 },
            max_backtracks: cfg.max_backtracks,
            on_indefinite: IndefiniteSpec::Diverge,
        }
    }
}

impl NanoSettings {
    pub fn config(&self) -> NanoConfig {
        NanoConfig {
            step_size: self.step_size,
            stop_criterion: match self.stop_criterion {
                StopSpec::Kl => StopCriterion::GaussianKl,
                StopSpec::CovNorm => StopCriterion::CovNorm,
            },
            stop_threshold: self.stop_threshold,
            max_update_iters: self.max_update_iters,
            predict_rule: self.predict_rule.rule(),
            update_rule: self.update_rule.rule(),
            init_strategy: match self.init {
                InitSpec::Prior => InitStrategy::Prior,
                InitSpec::LaplaceEkf => InitStrategy::LaplaceEkf,
            },
            residual_weighting: match self.residual_weighting {
                WeightingSpec::Identity => ResidualWeighting::Identity,
                WeightingSpec::InverseR => ResidualWeighting::InverseR,
            },
            integrator: match self.integrator {
                IntegratorSpec::SigmaPoints => UpdateIntegrator::SigmaPoints,
                IntegratorSpec::GaussHermite { points } => UpdateIntegrator::GaussHermite {
                    points_per_dim: points,
                },
                IntegratorSpec::MonteCarlo { samples, seed } => UpdateIntegrator::MonteCarlo {
                    n_samples: samples,
                    seed,
                },
            },
            max_backtracks: self.max_backtracks,
            on_indefinite: match self.on_indefinite {
                IndefiniteSpec::Diverge => IndefinitePolicy::Diverge,
                IndefiniteSpec::Retract => IndefinitePolicy::Retract,
            },
            ..NanoConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UkfSettings {
    pub rule: RuleSpec,
}

impl Default for UkfSettings {
    fn default() -> Self {
        UkfSettings {
            rule: RuleSpec::Named(NamedRule::VanDerMerwe),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IekfSettings {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IekfSettings {
    fn default() -> Self {
        IekfSettings {
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_IEKF_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlfSettings {
    pub rule: RuleSpec,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PlfSettings {
    fn default() -> Self {
        PlfSettings {
            rule: RuleSpec::Named(NamedRule::VanDerMerwe),
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_PLF_TOL,
        }
    }
}

/// A benchmark manifest as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub system: String,
    /// Defaults to the system's first noise case.
    #[serde(default)]
    pub noise: Option<String>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_filters")]
    pub filters: Vec<String>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub nano: NanoSettings,
    #[serde(default)]
    pub ukf: UkfSettings,
    #[serde(default)]
    pub iekf: IekfSettings,
    #[serde(default)]
    pub plf: PlfSettings,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_filters() -> Vec<String> {
    FilterKind::NAMES.iter().map(|s| s.to_string()).collect()
}

impl BenchConfig {
    /// Defaults for everything but the system and noise case.
    pub fn new(system: SystemName, noise: NoiseCase) -> Self {
        BenchConfig {
            system: system.as_str().to_string(),
            noise: Some(noise.as_str().to_string()),
            trials: DEFAULT_TRIALS,
            horizon: DEFAULT_HORIZON,
            base_seed: 0,
            filters: default_filters(),
            out_dir: None,
            nano: NanoSettings::default(),
            ukf: UkfSettings::default(),
            iekf: IekfSettings::default(),
            plf: PlfSettings::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn system_name(&self) -> Result<SystemName> {
        self.system.parse().map_err(|e: nano_filter::FilterError| BenchError::Config(e.to_string()))
    }

    pub fn noise_case(&self) -> Result<NoiseCase> {
        match &self.noise {
            Some(n) => n.parse().map_err(|e: nano_filter::FilterError| BenchError::Config(e.to_string())),
            None => Ok(self.system_name()?.noise_cases()[0]),
        }
    }

    pub fn benchmark(&self) -> Result<Benchmark> {
        make_system(self.system_name()?, self.noise_case()?).map_err(|e| BenchError::Config(e.to_string()))
    }

    /// Filters in manifest order with their configured settings.
    pub fn filter_kinds(&self) -> Result<Vec<FilterKind>> {
        if self.filters.is_empty() {
            return Err(BenchError::Config("filter list is empty".into()));
        }
        let mut kinds: Vec<FilterKind> = Vec::with_capacity(self.filters.len());
        for name in &self.filters {
            let kind = match name.to_ascii_lowercase().as_str() {
                "ekf" => FilterKind::Ekf,
                "ukf" => FilterKind::Ukf {
                    rule: self.ukf.rule.rule(),
                },
                "iekf" => FilterKind::Iekf {
                    max_iter: self.iekf.max_iter,
                    tol: self.iekf.tol,
                },
                "plf" => FilterKind::Plf {
                    rule: self.plf.rule.rule(),
                    max_iter: self.plf.max_iter,
                    tol: self.plf.tol,
                },
                "nano" => FilterKind::Nano(self.nano.config()),
                other => {
                    return Err(BenchError::Config(format!(
                        "unknown filter '{other}' (expected one of {})",
                        FilterKind::NAMES.join(", ")
                    )))
                }
            };
            if kinds.iter().any(|k| k.name() == kind.name()) {
                return Err(BenchError::Config(format!("filter '{name}' listed twice")));
            }
            kinds.push(kind);
        }
        Ok(kinds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(BenchError::Config("trials must be at least 1".into()));
        }
        if self.horizon == 0 {
            return Err(BenchError::Config("horizon must be at least 1".into()));
        }
        self.benchmark()?;
        self.filter_kinds()?;
        self.nano.config().validate().map_err(|e| BenchError::Config(e.to_string()))?;
        if self.iekf.max_iter == 0 || self.plf.max_iter == 0 {
            return Err(BenchError::Config("iteration caps must be at least 1".into()));
        }
        Ok(())
    }

    /// Per-trial seeds `base_seed + i`.
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.trials as u64).map(move |i| self.base_seed.wrapping_add(i))
    }
}
