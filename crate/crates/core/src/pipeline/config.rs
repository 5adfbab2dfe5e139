use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::adjudicator::{
    AdjudicationBackend, Adjudicator, BackendError, FixtureTable, RemoteBackend, RemoteConfig, ScoreCache, StubBackend,
    DEFAULT_RETRY_LIMIT,
};
use crate::domain::{ConfigOverrides, GridMap, Scenario};
use crate::mapf::CbsOptions;
use crate::voting::VotingParams;

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Stub,
    Remote(RemoteConfig),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Stub => "stub",
            Backend::Remote(_) => "remote",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutputFormat {
    #[serde(rename = "json")]
    Json,
    #[serde(rename = "csv-summary")]
    CsvSummary,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown format {0:?} (expected json or csv)")]
pub struct UnknownFormat(pub String);

impl FromStr for OutputFormat {
    type Err = UnknownFormat;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" | "csv-summary" => Ok(OutputFormat::CsvSummary),
            other => Err(UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::CsvSummary => "csv-summary",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("approval threshold must lie in (0, 1], got {0}")]
    ApprovalThreshold(f64),
    #[error("suboptimality factor must be >= 1, got {0}")]
    EcbsW(f64),
    #[error("horizon factor must be positive")]
    HorizonFactor,
    #[error("max_ct_nodes must be positive")]
    MaxCtNodes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub approval_threshold: f64,
    pub ecbs_w: f64,
    pub seed: u64,
    pub backend: Backend,
    /// Planning horizon in multiples of the cell count.
    pub horizon_factor: usize,
    pub multi_round: bool,
    pub retry_limit: u32,
    pub max_ct_nodes: usize,
    pub format: OutputFormat,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            approval_threshold: 0.7,
            ecbs_w: 1.0,
            seed: 0,
            backend: Backend::Stub,
            horizon_factor: 4,
            multi_round: false,
            retry_limit: DEFAULT_RETRY_LIMIT,
            max_ct_nodes: CbsOptions::default().max_ct_nodes,
            format: OutputFormat::Json,
        }
    }
}

impl PipelineConfig {
    /// Applies the fields a scenario file sets.
    pub fn apply(&mut self, overrides: &ConfigOverrides) {
        if let Some(v) = overrides.approval_threshold {
            self.approval_threshold = v;
        }
        if let Some(v) = overrides.ecbs_w {
            self.ecbs_w = v;
        }
        if let Some(v) = overrides.seed {
            self.seed = v;
        }
        if let Some(v) = overrides.horizon_factor {
            self.horizon_factor = v;
        }
        if let Some(v) = overrides.multi_round {
            self.multi_round = v;
        }
        if let Some(v) = overrides.retry_limit {
            self.retry_limit = v;
        }
        if let Some(v) = overrides.max_ct_nodes {
            self.max_ct_nodes = v;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let t = self.approval_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(ConfigError::ApprovalThreshold(t));
        }
        if !(self.ecbs_w >= 1.0 && self.ecbs_w.is_finite()) {
            return Err(ConfigError::EcbsW(self.ecbs_w));
        }
        if self.horizon_factor == 0 {
            return Err(ConfigError::HorizonFactor);
        }
        if self.max_ct_nodes == 0 {
            return Err(ConfigError::MaxCtNodes);
        }
        Ok(())
    }

    pub fn voting_params(&self) -> VotingParams {
        VotingParams {
            approval_threshold: self.approval_threshold,
        }
    }

    pub fn cbs_options(&self, grid: &GridMap) -> CbsOptions {
        CbsOptions {
            w: self.ecbs_w,
            horizon: Some(self.horizon_factor * grid.num_cells()),
            max_ct_nodes: self.max_ct_nodes,
        }
    }

    /// Builds the adjudicator for `scenario`. The stub answers from the
    /// scenario's fixture table first.
    pub fn adjudicator(&self, scenario: &Scenario, cache: ScoreCache) -> Result<Adjudicator, BackendError> {
        let backend: Box<dyn AdjudicationBackend> = match &self.backend {
            Backend::Stub => {
                let fixtures = FixtureTable::from(scenario.config.adjudicator_fixtures.clone());
                Box::new(StubBackend::new(self.seed, fixtures))
            }
            Backend::Remote(cfg) => Box::new(RemoteBackend::new(cfg.clone())?),
        };
        Ok(Adjudicator::with_cache(backend, cache, self.retry_limit))
    }
}
