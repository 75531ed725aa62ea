//! Run configuration: a versioned TOML file with one section per command.
//! Unknown keys are hard errors so grid typos cannot silently change runs.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use rbridge::experiments::TuningSpec;
use rbridge::restriction::RestrictionFile;
use rbridge::ScaleDivisor;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    /// Root seed; every random stream in a run derives from it.
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub fit: Option<FitConfig>,
    pub cv: Option<CvConfig>,
    pub simulate: Option<SimulateConfig>,
    pub analyze: Option<AnalyzeConfig>,
    pub check: Option<CheckConfig>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScaleDivisorConfig {
    #[default]
    N,
    NMinusOne,
}

impl From<ScaleDivisorConfig> for ScaleDivisor {
    fn from(v: ScaleDivisorConfig) -> Self {
        match v {
            ScaleDivisorConfig::N => ScaleDivisor::N,
            ScaleDivisorConfig::NMinusOne => ScaleDivisor::NMinusOne,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub dataset: PathBuf,
    pub response: String,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default)]
    pub scale_divisor: ScaleDivisorConfig,
    /// One of: bridge, rbridge, ridge, lasso, enet, scad, ols.
    pub estimator: String,
    pub lambda: Option<f64>,
    pub q: Option<f64>,
    pub alpha: Option<f64>,
    pub a: Option<f64>,
    pub restriction: Option<PathBuf>,
    pub eta: Option<f64>,
    pub max_iter: Option<usize>,
    #[serde(default = "default_fit_output")]
    pub output: String,
}

fn default_fit_output() -> String {
    "fit_result.json".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConfig {
    pub dataset: PathBuf,
    pub response: String,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default)]
    pub scale_divisor: ScaleDivisorConfig,
    pub restriction: Option<PathBuf>,
    /// Explicit lambda grid; overrides `n_lambda`.
    pub lambdas: Option<Vec<f64>>,
    pub n_lambda: Option<usize>,
    pub qs: Option<Vec<f64>>,
    pub k: Option<usize>,
    pub eta: Option<f64>,
    pub max_iter: Option<usize>,
    #[serde(default = "default_cv_result")]
    pub result_output: String,
    #[serde(default = "default_cv_surface")]
    pub surface_output: String,
}

fn default_cv_result() -> String {
    "cv_result.json".into()
}

fn default_cv_surface() -> String {
    "cve_surface.csv".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Scenario id: example1 or example2.
    pub scenario: String,
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub sigma: f64,
    pub rho: f64,
    pub nreps: usize,
    #[serde(default)]
    pub raw_me: bool,
    #[serde(default)]
    pub tuning: Option<TuningConfig>,
    #[serde(default = "default_summary_output")]
    pub output: String,
}

fn default_summary_output() -> String {
    "summary.csv".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub dataset: PathBuf,
    pub response: String,
    #[serde(default)]
    pub scale_divisor: ScaleDivisorConfig,
    /// JSON file with `[{label, restriction, beta}]` entries.
    pub priors: PathBuf,
    pub nreps: Option<usize>,
    #[serde(default)]
    pub tuning: Option<TuningConfig>,
    #[serde(default = "default_analysis_output")]
    pub output: String,
}

fn default_analysis_output() -> String {
    "analysis.csv".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    /// One of: mse_formula, consistency, oracle_equivalence.
    pub id: String,
    pub draws: Option<usize>,
    pub sigmas: Option<Vec<f64>>,
    pub tol: Option<f64>,
    /// "sqrt_n", "linear_n", or a fixed number.
    pub lambda_rule: Option<String>,
    pub ns: Option<Vec<usize>>,
    pub nreps: Option<usize>,
    pub q: Option<f64>,
    pub instances: Option<usize>,
    #[serde(default = "default_check_output")]
    pub output: String,
}

fn default_check_output() -> String {
    "check_report.txt".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    pub k: Option<usize>,
    pub n_lambda: Option<usize>,
    pub qs: Option<Vec<f64>>,
    pub alphas: Option<Vec<f64>>,
    pub fixed_lambda: Option<f64>,
    pub fixed_q: Option<f64>,
}

impl TuningConfig {
    pub fn to_spec(&self) -> TuningSpec {
        let mut spec = TuningSpec::default();
        if let Some(k) = self.k {
            spec.k = k;
        }
        if let Some(n) = self.n_lambda {
            spec.n_lambda = n;
        }
        if let Some(qs) = &self.qs {
            spec.qs = qs.clone();
        }
        if let Some(alphas) = &self.alphas {
            spec.alphas = alphas.clone();
        }
        if let Some(lambda) = self.fixed_lambda {
            spec.fixed = Some((lambda, self.fixed_q.unwrap_or(1.0)));
        }
        spec
    }
}

/// Prior file entry for the analyze command.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorEntry {
    pub label: String,
    pub restriction: RestrictionFile,
    pub beta: Vec<f64>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn load_config(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    let config: ConfigFile =
        toml::from_str(&text).map_err(|e| ConfigError(format!("invalid config: {e}")))?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(ConfigError(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    Ok(config)
}

/// Paths named in a config must exist before the run starts.
pub fn require_exists(path: &Path, what: &str) -> Result<(), ConfigError> {
    if !path.exists() {
        return Err(ConfigError(format!(
            "{what} path does not exist: {}",
            path.display()
        )));
    }
    Ok(())
}
