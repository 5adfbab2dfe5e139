//! End-to-end run: validation, suitability matrix, consensus allocation, path planning.

mod config;
mod report;
mod svg;

use std::collections::BTreeSet;
use std::time::Instant;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adjudicator::{Adjudicator, BackendError, ScoreCache};
use crate::domain::{emit_scenario, validate_scenario, Cell, Scenario, Violation};
use crate::mapf::{cbs_solve, CbsError, Solution};
use crate::suitability::{build_matrix, SuitabilityError, SuitabilityMatrix};
use crate::voting::{consensus_allocate, AllocationResult, Assignment, VotingParams};

pub use config::{Backend, ConfigError, OutputFormat, PipelineConfig, UnknownFormat};
pub use report::{emit_report, emit_report_named, EmitError, Metrics, PlannedPath, Planning, PlanningStatus, Report, RunSettings, Timings};
pub use svg::{render_svg, PALETTE};

/// Which stages run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Matrix, voting and planning.
    Full,
    /// Stop after allocation.
    AssignOnly,
    /// Skip scoring and voting; plan the scenario's embedded assignment.
    PlanOnly,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("scenario failed validation with {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error("suitability: {0}")]
    Suitability(#[from] SuitabilityError),
    #[error("adjudicator backend: {0}")]
    Backend(#[from] BackendError),
    #[error("scenario has no embedded assignment to plan")]
    MissingAssignment,
    #[error("planner rejected its input: {0}")]
    Planning(String),
    #[error("planning failed: {reason}")]
    Unsolvable { reason: String, report: Box<Report> },
}

/// Hex SHA-256 of the canonical scenario document.
pub fn scenario_digest(scenario: &Scenario) -> String {
    hex::encode(Sha256::digest(emit_scenario(scenario).as_bytes()))
}

/// Full pipeline with a fresh adjudicator built from `config`.
pub fn run_pipeline(scenario: &Scenario, config: &PipelineConfig) -> Result<Report, PipelineError> {
    let adjudicator = config.adjudicator(scenario, ScoreCache::new())?;
    run_with(scenario, config, Mode::Full, &adjudicator)
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

pub fn run_with(scenario: &Scenario, config: &PipelineConfig, mode: Mode, adjudicator: &Adjudicator) -> Result<Report, PipelineError> {
    let start = Instant::now();
    let mut timings = Timings::default();
    config.validate()?;
    let violations = validate_scenario(scenario);
    if !violations.is_empty() {
        return Err(PipelineError::Invalid(violations));
    }
    timings.validate_ms = ms(start);

    let (matrix, rounds, assignment) = if mode == Mode::PlanOnly {
        let assignment = scenario.assignment.clone().ok_or(PipelineError::MissingAssignment)?;
        (None, Vec::new(), assignment)
    } else {
        let t = Instant::now();
        let matrix = build_matrix(scenario, adjudicator)?;
        timings.matrix_ms = ms(t);
        let t = Instant::now();
        let (rounds, assignment) = allocate(&matrix, &config.voting_params(), config.multi_round);
        timings.allocation_ms = ms(t);
        (Some(matrix), rounds, assignment)
    };

    let busy: BTreeSet<&String> = assignment.values().collect();
    let mut report = Report {
        scenario_digest: scenario_digest(scenario),
        settings: RunSettings {
            approval_threshold: config.approval_threshold,
            ecbs_w: config.ecbs_w,
            seed: config.seed,
            backend: config.backend.name().to_string(),
            horizon_factor: config.horizon_factor,
            multi_round: config.multi_round,
        },
        tasks: scenario.tasks.iter().map(|t| t.task_id.clone()).collect(),
        unassigned_tasks: scenario
            .tasks
            .iter()
            .filter(|t| !assignment.contains_key(&t.task_id))
            .map(|t| t.task_id.clone())
            .collect(),
        idle_agents: scenario
            .agents
            .iter()
            .filter(|a| !busy.contains(&a.agent_id))
            .map(|a| a.agent_id.clone())
            .collect(),
        matrix,
        rounds,
        assignment,
        paths: Vec::new(),
        planning: Planning {
            status: PlanningStatus::Skipped,
            detail: None,
        },
        metrics: Metrics::default(),
        timings,
    };
    report.metrics.record_adjudicator(adjudicator.stats());

    if mode != Mode::AssignOnly {
        let t = Instant::now();
        let outcome = plan(scenario, config, &report.assignment);
        report.timings.planning_ms = ms(t);
        match outcome {
            Ok((pairs, solution)) => {
                report.metrics.soc = solution.soc;
                report.metrics.makespan = solution.makespan;
                record_search(&mut report.metrics, &solution.stats);
                report.paths = pairs
                    .into_iter()
                    .zip(solution.paths)
                    .map(|((agent, task), p)| PlannedPath {
                        agent,
                        task,
                        cost: p.cost(),
                        cells: p.cells().to_vec(),
                    })
                    .collect();
                report.planning.status = PlanningStatus::Solved;
            }
            Err(CbsError::Unsolvable { reason, stats }) => {
                record_search(&mut report.metrics, &stats);
                report.planning = Planning {
                    status: PlanningStatus::Unsolvable,
                    detail: Some(reason.clone()),
                };
                report.timings.total_ms = ms(start);
                return Err(PipelineError::Unsolvable {
                    reason,
                    report: Box::new(report),
                });
            }
            Err(CbsError::InvalidInput(m)) => return Err(PipelineError::Planning(m)),
        }
    }
    report.timings.total_ms = ms(start);
    Ok(report)
}

fn record_search(m: &mut Metrics, s: &crate::mapf::SearchStats) {
    m.ct_nodes_expanded = s.ct_nodes_expanded;
    m.ct_nodes_generated = s.ct_nodes_generated;
    m.conflicts_resolved = s.conflicts_resolved;
    m.low_level_expansions = s.low_level_expansions;
}

/// Consensus allocation; with `multi_round`, leftover tasks are re-offered to
/// idle agents until a round assigns nothing.
pub fn allocate(matrix: &SuitabilityMatrix, params: &VotingParams, multi_round: bool) -> (Vec<AllocationResult>, Assignment) {
    let first = consensus_allocate(matrix, params);
    let mut assignment = first.final_assignment.clone();
    let mut rounds = vec![first];
    if !multi_round {
        return (rounds, assignment);
    }
    loop {
        let busy: BTreeSet<&String> = assignment.values().collect();
        let idle: Vec<usize> = (0..matrix.num_agents()).filter(|&a| !busy.contains(&matrix.agents[a])).collect();
        let open: Vec<usize> = (0..matrix.num_tasks()).filter(|&t| !assignment.contains_key(&matrix.tasks[t])).collect();
        if idle.is_empty() || open.is_empty() {
            break;
        }
        let round = consensus_allocate(&matrix.submatrix(&idle, &open), params);
        if round.final_assignment.is_empty() {
            break;
        }
        assignment.extend(round.final_assignment.clone());
        rounds.push(round);
    }
    (rounds, assignment)
}

type Pairs = Vec<(String, String)>;

/// Plans every assigned (agent, task) pair, agents in id order.
fn plan(scenario: &Scenario, config: &PipelineConfig, assignment: &Assignment) -> Result<(Pairs, Solution), CbsError> {
    let mut pairs: Pairs = assignment.iter().map(|(t, a)| (a.clone(), t.clone())).collect();
    pairs.sort();
    let lookup = |(a, t): &(String, String)| -> Result<(Cell, Cell), CbsError> {
        let agent = scenario.agent(a).ok_or_else(|| CbsError::InvalidInput(format!("unknown agent {a}")))?;
        let task = scenario.task(t).ok_or_else(|| CbsError::InvalidInput(format!("unknown task {t}")))?;
        Ok((agent.start, task.goal))
    };
    let (starts, goals): (Vec<Cell>, Vec<Cell>) = pairs.iter().map(lookup).collect::<Result<Vec<_>, _>>()?.into_iter().unzip();
    let solution = cbs_solve(&scenario.map, &starts, &goals, &config.cbs_options(&scenario.map))?;
    Ok((pairs, solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{parse_scenario, GridMap};
    use crate::mapf::detect_conflict;

    const TABLE1: &str = include_str!("../../fixtures/table1.json");

    fn table1() -> Scenario {
        parse_scenario(TABLE1).unwrap()
    }

    #[test]
    fn table1_end_to_end() {
        let r = run_pipeline(&table1(), &PipelineConfig::default()).unwrap();
        let expected = Assignment::from([
            ("Place Wall Panel".to_string(), "A".to_string()),
            ("Transport Module".to_string(), "C".to_string()),
        ]);
        assert_eq!(r.assignment, expected);
        assert_eq!(r.idle_agents, vec!["B"]);
        assert_eq!(r.planning.status, PlanningStatus::Solved);
        assert_eq!(r.paths.len(), 2);
        assert_eq!((r.paths[0].agent.as_str(), r.paths[1].agent.as_str()), ("A", "C"));
        // A: (0,0)→(6,6) and C: (0,7)→(6,1) are 12 moves each.
        assert_eq!(r.metrics.soc, r.paths.iter().map(|p| p.cost).sum::<usize>());
        let paths: Vec<_> = r.paths.iter().map(|p| crate::mapf::Path::new(p.cells.clone())).collect();
        assert!(detect_conflict(&paths).is_none());
        assert_eq!(r.metrics.soc, 24);
        assert_eq!(r.votes("Place Wall Panel"), Some(6));
        assert_eq!(r.metrics.adjudicator_requests, 0);
    }

    #[test]
    fn zero_tasks() {
        let mut s = table1();
        s.tasks.clear();
        let r = run_pipeline(&s, &PipelineConfig::default()).unwrap();
        assert!(r.assignment.is_empty() && r.paths.is_empty());
        assert_eq!(r.idle_agents, vec!["A", "B", "C"]);
        assert_eq!(r.metrics.soc, 0);
    }

    #[test]
    fn deterministic_json() {
        let cfg = PipelineConfig::default();
        let a = run_pipeline(&table1(), &cfg).unwrap().to_json_without_timings();
        let b = run_pipeline(&table1(), &cfg).unwrap().to_json_without_timings();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    }

    #[test]
    fn assign_only_skips_planning() {
        let s = table1();
        let cfg = PipelineConfig::default();
        let adj = cfg.adjudicator(&s, ScoreCache::new()).unwrap();
        let r = run_with(&s, &cfg, Mode::AssignOnly, &adj).unwrap();
        assert_eq!(r.planning.status, PlanningStatus::Skipped);
        assert!(r.paths.is_empty());
        assert_eq!(r.assignment.len(), 2);
    }

    #[test]
    fn plan_only_uses_embedded_assignment() {
        let mut s = table1();
        let cfg = PipelineConfig::default();
        let adj = cfg.adjudicator(&s, ScoreCache::new()).unwrap();
        assert!(matches!(run_with(&s, &cfg, Mode::PlanOnly, &adj), Err(PipelineError::MissingAssignment)));
        s.assignment = Some(Assignment::from([("Transport Module".to_string(), "B".to_string())]));
        let r = run_with(&s, &cfg, Mode::PlanOnly, &adj).unwrap();
        assert!(r.matrix.is_none());
        assert_eq!(r.paths.len(), 1);
        assert_eq!((r.paths[0].agent.as_str(), r.paths[0].cost), ("B", 2));
        assert_eq!(r.idle_agents, vec!["A", "C"]);
    }

    #[test]
    fn invalid_scenario() {
        let mut s = table1();
        s.agents[1].start = s.agents[0].start;
        assert!(matches!(run_pipeline(&s, &PipelineConfig::default()), Err(PipelineError::Invalid(v)) if v.len() == 1));
    }

    #[test]
    fn unsolvable_keeps_partial_report() {
        let mut s = table1();
        s.map = crate::domain::parse_grid_map("........\n@@@@@@@@\n........\n........\n........\n........\n........\n........").unwrap();
        s.agents[1].start = Cell::new(7, 2);
        s.tasks[0].goal = Cell::new(6, 6);
        s.tasks[1].goal = Cell::new(6, 0);
        let cfg = PipelineConfig {
            max_ct_nodes: 50,
            ..PipelineConfig::default()
        };
        match run_pipeline(&s, &cfg) {
            Err(PipelineError::Unsolvable { report, .. }) => {
                assert_eq!(report.planning.status, PlanningStatus::Unsolvable);
                assert_eq!(report.assignment.len(), 2);
                assert!(report.paths.is_empty());
            }
            other => panic!("expected unsolvable, got {other:?}"),
        }
    }

    #[test]
    fn csv_summary_rows() {
        let r = run_pipeline(&table1(), &PipelineConfig::default()).unwrap();
        let text = String::from_utf8(emit_report(&r, OutputFormat::CsvSummary).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "task,agent,suitability,votes,path_cost");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("Place Wall Panel,A,0.97916"));
        assert!(lines[1].ends_with(",6,12"));
        assert!(lines[2].starts_with("Transport Module,C,0.9483"));
        assert_eq!(lines[3], "# idle agents: B");
        assert!(!lines[1..3].iter().any(|l| l.contains(",B,")));
    }

    #[test]
    fn empty_report_json_and_unknown_format() {
        let s = Scenario::new(GridMap::empty(2, 2), vec![], vec![]);
        let r = run_pipeline(&s, &PipelineConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&emit_report(&r, OutputFormat::Json).unwrap()).unwrap();
        assert_eq!(v["paths"], serde_json::json!([]));
        assert_eq!(v["tasks"], serde_json::json!([]));
        assert!(matches!(emit_report_named(&r, "xml"), Err(EmitError::UnknownFormat(_))));
    }

    #[test]
    fn multi_round_never_undoes_first_round() {
        let s = table1();
        let cfg = PipelineConfig {
            multi_round: true,
            ..PipelineConfig::default()
        };
        let r = run_pipeline(&s, &cfg).unwrap();
        assert_eq!(r.assignment.len(), 2);
        assert_eq!(r.rounds.len(), 1);
    }
}
