use serde::Serialize;
use thiserror::Error;

use super::config::{OutputFormat, UnknownFormat};
use crate::adjudicator::AdjudicatorStats;
use crate::domain::Cell;
use crate::suitability::SuitabilityMatrix;
use crate::voting::{AllocationResult, Assignment};

/// Settings that influence the report contents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSettings {
    pub approval_threshold: f64,
    pub ecbs_w: f64,
    pub seed: u64,
    pub backend: String,
    pub horizon_factor: usize,
    pub multi_round: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlannedPath {
    pub agent: String,
    pub task: String,
    pub cost: usize,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanningStatus {
    Solved,
    Skipped,
    Unsolvable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Planning {
    pub status: PlanningStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub soc: usize,
    pub makespan: usize,
    pub ct_nodes_expanded: usize,
    pub ct_nodes_generated: usize,
    pub conflicts_resolved: usize,
    pub low_level_expansions: usize,
    pub adjudicator_requests: u64,
    pub adjudicator_calls: u64,
    pub adjudicator_failures: u64,
    pub adjudicator_fallbacks: u64,
    pub adjudicator_cache_hits: u64,
}

impl Metrics {
    pub(crate) fn record_adjudicator(&mut self, s: AdjudicatorStats) {
        self.adjudicator_requests = s.requests;
        self.adjudicator_calls = s.backend_calls;
        self.adjudicator_failures = s.failures;
        self.adjudicator_fallbacks = s.fallbacks;
        self.adjudicator_cache_hits = s.cache_hits;
    }
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub validate_ms: f64,
    pub matrix_ms: f64,
    pub allocation_ms: f64,
    pub planning_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    /// SHA-256 of the canonical scenario document.
    pub scenario_digest: String,
    pub settings: RunSettings,
    /// Task ids in scenario order.
    pub tasks: Vec<String>,
    /// Absent when planning from an embedded assignment.
    pub matrix: Option<SuitabilityMatrix>,
    /// One entry per allocation round.
    pub rounds: Vec<AllocationResult>,
    pub assignment: Assignment,
    pub unassigned_tasks: Vec<String>,
    pub idle_agents: Vec<String>,
    pub paths: Vec<PlannedPath>,
    pub planning: Planning,
    pub metrics: Metrics,
    pub timings: Timings,
}

impl Report {
    /// Votes the assigned agent received for `task` in the round that assigned it.
    pub fn votes(&self, task: &str) -> Option<u32> {
        let agent = self.assignment.get(task)?;
        self.rounds.iter().find_map(|r| {
            if r.final_assignment.get(task) != Some(agent) {
                return None;
            }
            let b = r.ballots.first()?;
            let a = b.weights.agents.iter().position(|x| x == agent)?;
            let t = b.weights.tasks.iter().position(|x| x == task)?;
            Some(r.tallies[a][t])
        })
    }

    pub fn suitability(&self, task: &str, agent: &str) -> Option<f64> {
        let m = self.matrix.as_ref()?;
        Some(m.overall(m.agent_index(agent)?, m.task_index(task)?))
    }

    /// Report as a JSON value with the `timings` field removed.
    pub fn to_json_without_timings(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings");
        }
        v
    }
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error(transparent)]
    UnknownFormat(#[from] UnknownFormat),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Renders a report. The CSV summary has one row per task, in scenario order.
pub fn emit_report(report: &Report, format: OutputFormat) -> Result<Vec<u8>, EmitError> {
    match format {
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        OutputFormat::CsvSummary => csv_summary(report),
    }
}

/// Like [`emit_report`] but takes the format by name.
pub fn emit_report_named(report: &Report, format: &str) -> Result<Vec<u8>, EmitError> {
    emit_report(report, format.parse()?)
}

fn csv_summary(report: &Report) -> Result<Vec<u8>, EmitError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["task", "agent", "suitability", "votes", "path_cost"])?;
    for task in &report.tasks {
        let agent = report.assignment.get(task);
        let suitability = agent.and_then(|a| report.suitability(task, a)).map(|s| s.to_string());
        let votes = report.votes(task).map(|v| v.to_string());
        let cost = report.paths.iter().find(|p| &p.task == task).map(|p| p.cost.to_string());
        w.write_record([
            task.as_str(),
            agent.map_or("", String::as_str),
            suitability.as_deref().unwrap_or(""),
            votes.as_deref().unwrap_or(""),
            cost.as_deref().unwrap_or(""),
        ])?;
    }
    let mut out = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    out.extend_from_slice(format!("# idle agents: {}\n", report.idle_agents.join(", ")).as_bytes());
    Ok(out)
}
