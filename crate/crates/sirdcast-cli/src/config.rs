//! Run configuration: a TOML file checked into each run for provenance.
//! Command-line flags override individual keys.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use sirdcast::evaluation::Variable;
use sirdcast::regression::SearchSpace;
use sirdcast::sird::ParamKind;
use sirdcast::training::AggregationMode;
use sirdcast::{Error, RepairPolicy, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Inputs,
    pub output: Output,
    #[serde(default)]
    pub repair: Repair,
    #[serde(default)]
    pub forecast: Forecast,
    #[serde(default)]
    pub search: Search,
    #[serde(default)]
    pub bootstrap: Bootstrap,
    #[serde(default)]
    pub backtest: Option<Backtest>,
    /// Worker-pool bound; defaults to the available parallelism.
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub province_cases: PathBuf,
    pub region_full: PathBuf,
    pub province_deaths: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Repair {
    #[serde(default)]
    pub policy: RepairPolicyName,
}

#[derive(Debug, Clone, Copy, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RepairPolicyName {
    None,
    #[default]
    ClampMonotone,
}

impl From<RepairPolicyName> for RepairPolicy {
    fn from(name: RepairPolicyName) -> Self {
        match name {
            RepairPolicyName::None => RepairPolicy::None,
            RepairPolicyName::ClampMonotone => RepairPolicy::ClampMonotone,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Forecast {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_horizon_cap")]
    pub horizon_cap: usize,
    #[serde(default)]
    pub mode: ModeName,
    /// Correlation window in days; absent means the full history.
    #[serde(default)]
    pub window: Option<usize>,
}

fn default_horizon() -> usize {
    7
}

fn default_horizon_cap() -> usize {
    sirdcast::ForecastConfig::DEFAULT_HORIZON_CAP
}

impl Default for Forecast {
    fn default() -> Self {
        Forecast {
            horizon: default_horizon(),
            horizon_cap: default_horizon_cap(),
            mode: ModeName::default(),
            window: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    Regional,
    Provincial,
}

impl From<ModeName> for AggregationMode {
    fn from(name: ModeName) -> Self {
        match name {
            ModeName::Regional => AggregationMode::Regional,
            ModeName::Provincial => AggregationMode::Provincial,
        }
    }
}

impl std::str::FromStr for ModeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regional" => Ok(ModeName::Regional),
            "provincial" => Ok(ModeName::Provincial),
            other => Err(Error::InvalidInput(format!(
                "unknown training mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Search {
    pub lag_min: usize,
    pub lag_max: usize,
    pub penalty_grid: Vec<f64>,
    pub cv_folds: usize,
}

impl Default for Search {
    fn default() -> Self {
        let s = SearchSpace::default();
        Search {
            lag_min: s.lag_min,
            lag_max: s.lag_max,
            penalty_grid: s.penalty_grid,
            cv_folds: s.cv_folds,
        }
    }
}

impl From<&Search> for SearchSpace {
    fn from(s: &Search) -> Self {
        SearchSpace {
            lag_min: s.lag_min,
            lag_max: s.lag_max,
            penalty_grid: s.penalty_grid.clone(),
            cv_folds: s.cv_folds,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bootstrap {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Mandatory whenever bootstrap is enabled.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub focus: FocusName,
}

fn default_replications() -> usize {
    1000
}

fn default_alpha() -> f64 {
    0.10
}

impl Default for Bootstrap {
    fn default() -> Self {
        Bootstrap {
            enabled: false,
            replications: default_replications(),
            alpha: default_alpha(),
            seed: None,
            focus: FocusName::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum FocusName {
    #[default]
    Beta,
    GammaR,
    GammaD,
}

impl From<FocusName> for ParamKind {
    fn from(name: FocusName) -> Self {
        match name {
            FocusName::Beta => ParamKind::Beta,
            FocusName::GammaR => ParamKind::GammaR,
            FocusName::GammaD => ParamKind::GammaD,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Backtest {
    pub start: NaiveDate,
    pub end: NaiveDate,
    #[serde(default = "default_backtest_horizon")]
    pub max_horizon: usize,
    #[serde(default = "default_modes")]
    pub modes: Vec<ModeName>,
    #[serde(default = "default_variables")]
    pub variables: Vec<String>,
}

fn default_backtest_horizon() -> usize {
    15
}

fn default_modes() -> Vec<ModeName> {
    vec![ModeName::Regional, ModeName::Provincial]
}

fn default_variables() -> Vec<String> {
    vec!["I".into(), "R".into(), "D".into(), "T".into()]
}

impl Backtest {
    pub fn parsed_variables(&self) -> Result<Vec<Variable>> {
        self.variables.iter().map(|v| v.parse()).collect()
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let body = std::fs::read_to_string(path)?;
        let config: RunConfig = toml::from_str(&body)
            .map_err(|e| Error::InvalidInput(format!("config file {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, path) in [
            ("province_cases", &self.inputs.province_cases),
            ("region_full", &self.inputs.region_full),
            ("province_deaths", &self.inputs.province_deaths),
        ] {
            if !path.exists() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("{label} input `{}` does not exist", path.display()),
                )));
            }
        }
        if self.bootstrap.enabled && self.bootstrap.seed.is_none() {
            return Err(Error::InvalidInput(
                "bootstrap is enabled but no seed is set; seeded randomness is mandatory".into(),
            ));
        }
        Ok(())
    }

    pub fn search_space(&self) -> SearchSpace {
        SearchSpace::from(&self.search)
    }
}
