//! Rule-based agent/task suitability scoring.
//!
//! Structured requirements are scored with a hard feasibility gate followed by
//! a soft band that prefers tight fits:
//!
//! * numeric minimum: `0` below the requirement, otherwise
//!   `0.75 + 0.25 * (1 - min(1, (cap - req) / req))`
//! * ordered minimum (terrain): `0` below, `1.0` exact, `0.9` above
//! * required tool: `1` if listed, `0` otherwise
//!
//! Free-text requirements, and structured requirements the agent has no entry
//! for, are scored by the [`Adjudicator`]. A pair's overall score is `0` if
//! any structured dimension is infeasible, otherwise the weighted mean of all
//! dimension scores.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adjudicator::{AdjudicationRequest, Adjudicator};
use crate::domain::{CapabilityProfile, CapabilityValue, Quantity, Requirement, RequirementKind, Scenario, TaskDescription, TerrainLevel};

pub const NUMERIC_FLOOR: f64 = 0.75;
pub const ORDERED_ABOVE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionScore {
    pub dimension: String,
    pub score: f64,
    pub feasible: bool,
    pub adjudicated: bool,
    /// Set when the adjudicator gave up and returned its neutral score.
    #[serde(default)]
    pub fallback: bool,
}

impl DimensionScore {
    fn rule(dimension: &str, score: f64) -> Self {
        DimensionScore {
            dimension: dimension.to_string(),
            score,
            feasible: score > 0.0,
            adjudicated: false,
            fallback: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAssessment {
    pub agent_id: String,
    pub task_id: String,
    pub overall: f64,
    pub breakdown: Vec<DimensionScore>,
}

impl PairAssessment {
    pub fn is_feasible(&self) -> bool {
        self.overall > 0.0
    }

    /// True if a rule-scored dimension failed its gate.
    pub fn structurally_infeasible(&self) -> bool {
        self.breakdown.iter().any(|d| !d.adjudicated && !d.feasible)
    }
}

/// Agents × tasks assessments, stored agent-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuitabilityMatrix {
    pub agents: Vec<String>,
    pub tasks: Vec<String>,
    pub cells: Vec<PairAssessment>,
}

impl SuitabilityMatrix {
    /// Builds a matrix from overall scores only (`scores[agent][task]`); each
    /// cell gets a single synthetic breakdown entry.
    pub fn from_scores(agents: Vec<String>, tasks: Vec<String>, scores: &[Vec<f64>]) -> Self {
        let mut cells = Vec::with_capacity(agents.len() * tasks.len());
        for (a, row) in agents.iter().zip(scores) {
            assert_eq!(row.len(), tasks.len(), "score row width must match task count");
            for (t, &s) in tasks.iter().zip(row) {
                cells.push(PairAssessment {
                    agent_id: a.clone(),
                    task_id: t.clone(),
                    overall: s,
                    breakdown: vec![DimensionScore::rule("overall", s)],
                });
            }
        }
        assert_eq!(cells.len(), agents.len() * tasks.len(), "one score row per agent");
        SuitabilityMatrix { agents, tasks, cells }
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn cell(&self, agent: usize, task: usize) -> &PairAssessment {
        &self.cells[agent * self.tasks.len() + task]
    }

    pub fn overall(&self, agent: usize, task: usize) -> f64 {
        self.cell(agent, task).overall
    }

    pub fn is_feasible(&self, agent: usize, task: usize) -> bool {
        self.cell(agent, task).is_feasible()
    }

    pub fn agent_index(&self, id: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == id)
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t == id)
    }

    /// Overall scores as rows per agent.
    pub fn overall_rows(&self) -> Vec<Vec<f64>> {
        (0..self.num_agents())
            .map(|a| (0..self.num_tasks()).map(|t| self.overall(a, t)).collect())
            .collect()
    }

    /// Restricts the matrix to the given agent and task indices, preserving order.
    pub fn submatrix(&self, agents: &[usize], tasks: &[usize]) -> Self {
        SuitabilityMatrix {
            agents: agents.iter().map(|&a| self.agents[a].clone()).collect(),
            tasks: tasks.iter().map(|&t| self.tasks[t].clone()).collect(),
            cells: agents
                .iter()
                .flat_map(|&a| tasks.iter().map(move |&t| (a, t)))
                .map(|(a, t)| self.cell(a, t).clone())
                .collect(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SuitabilityError {
    #[error("dimension {dimension}: requirement in {required}, capability in {available}")]
    UnitMismatch {
        dimension: String,
        required: String,
        available: String,
    },
    #[error("dimension {dimension}: {requirement} requirement cannot be compared with a {capability} capability")]
    KindMismatch {
        dimension: String,
        requirement: &'static str,
        capability: &'static str,
    },
}

/// Score for `capability >= requirement` on a numeric dimension.
pub fn numeric_score(capability: f64, requirement: f64) -> f64 {
    if capability < requirement {
        return 0.0;
    }
    let excess = if requirement > 0.0 {
        (capability - requirement) / requirement
    } else if capability > 0.0 {
        1.0
    } else {
        0.0
    };
    NUMERIC_FLOOR + (1.0 - NUMERIC_FLOOR) * (1.0 - excess.min(1.0))
}

pub fn ordered_score(capability: TerrainLevel, requirement: TerrainLevel) -> f64 {
    use std::cmp::Ordering::*;
    match capability.cmp(&requirement) {
        Less => 0.0,
        Equal => 1.0,
        Greater => ORDERED_ABOVE,
    }
}

fn capability_kind(value: &CapabilityValue) -> &'static str {
    match value {
        CapabilityValue::Quantity(_) => "quantity",
        CapabilityValue::Terrain(_) => "terrain",
        CapabilityValue::Tools(_) => "tools",
        CapabilityValue::Notes(_) => "notes",
    }
}

fn quantity_score(dimension: &str, req: &Quantity, cap: &Quantity) -> Result<f64, SuitabilityError> {
    if req.unit != cap.unit {
        return Err(SuitabilityError::UnitMismatch {
            dimension: dimension.to_string(),
            required: req.unit.to_string(),
            available: cap.unit.to_string(),
        });
    }
    Ok(numeric_score(cap.value, req.value))
}

/// Scores one requirement against the agent's entry for that dimension.
/// `adjudicate` is called only for free-text requirements or when `entry` is absent.
pub fn dimension_score(
    requirement: &Requirement,
    entry: Option<&CapabilityValue>,
    adjudicate: impl FnOnce() -> DimensionScore,
) -> Result<DimensionScore, SuitabilityError> {
    let dim = requirement.dimension.as_str();
    let score = match (&requirement.kind, entry) {
        (RequirementKind::FreeText(_), _) | (_, None) => return Ok(adjudicate()),
        (RequirementKind::NumericMin(req), Some(CapabilityValue::Quantity(cap))) => quantity_score(dim, req, cap)?,
        (RequirementKind::OrderedMin(req), Some(CapabilityValue::Terrain(cap))) => ordered_score(*cap, *req),
        (RequirementKind::ToolRequired(tool), Some(CapabilityValue::Tools(tools))) => {
            if tools.iter().any(|t| t == tool) {
                1.0
            } else {
                0.0
            }
        }
        (kind, Some(other)) => {
            return Err(SuitabilityError::KindMismatch {
                dimension: dim.to_string(),
                requirement: kind.kind_name(),
                capability: capability_kind(other),
            })
        }
    };
    Ok(DimensionScore::rule(dim, score))
}

/// Unweighted assessment of one agent/task pair.
pub fn pair_suitability(
    profile: &CapabilityProfile,
    task: &TaskDescription,
    adjudicator: &Adjudicator,
) -> Result<PairAssessment, SuitabilityError> {
    pair_suitability_weighted(profile, task, adjudicator, &BTreeMap::new())
}

/// Assessment with per-dimension aggregation weights; missing dimensions weigh 1.
/// A task without requirements is adjudicated as a whole pair.
pub fn pair_suitability_weighted(
    profile: &CapabilityProfile,
    task: &TaskDescription,
    adjudicator: &Adjudicator,
    weights: &BTreeMap<String, f64>,
) -> Result<PairAssessment, SuitabilityError> {
    let breakdown = if task.requirements.is_empty() {
        vec![adjudicator.adjudicate(&AdjudicationRequest::new(profile, task, ""))]
    } else {
        task.requirements
            .iter()
            .map(|r| {
                dimension_score(r, profile.get(&r.dimension), || {
                    adjudicator.adjudicate(&AdjudicationRequest::new(profile, task, r.dimension.clone()))
                })
            })
            .collect::<Result<Vec<_>, _>>()?
    };

    let gated = breakdown.iter().any(|d| !d.adjudicated && !d.feasible);
    let overall = if gated {
        0.0
    } else {
        let (mut num, mut den) = (0.0, 0.0);
        for d in &breakdown {
            let w = weights.get(&d.dimension).copied().unwrap_or(1.0);
            num += w * d.score;
            den += w;
        }
        if den > 0.0 {
            (num / den).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    Ok(PairAssessment {
        agent_id: profile.agent_id.clone(),
        task_id: task.task_id.clone(),
        overall,
        breakdown,
    })
}

/// Scores every agent/task pair of the scenario. Cells are computed in parallel;
/// the result does not depend on evaluation order.
pub fn build_matrix(scenario: &Scenario, adjudicator: &Adjudicator) -> Result<SuitabilityMatrix, SuitabilityError> {
    let weights = &scenario.config.dimension_weights;
    let pairs: Vec<(usize, usize)> = (0..scenario.agents.len())
        .flat_map(|a| (0..scenario.tasks.len()).map(move |t| (a, t)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(a, t)| pair_suitability_weighted(&scenario.agents[a], &scenario.tasks[t], adjudicator, weights))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SuitabilityMatrix {
        agents: scenario.agents.iter().map(|a| a.agent_id.clone()).collect(),
        tasks: scenario.tasks.iter().map(|t| t.task_id.clone()).collect(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjudicator::FixtureTable;
    use crate::domain::parse_scenario;

    const TABLE1: &str = include_str!("../../fixtures/table1.json");

    fn never() -> DimensionScore {
        panic!("adjudicator must not be consulted")
    }

    fn numeric(dim: &str, q: Quantity) -> Requirement {
        Requirement::new(dim, RequirementKind::NumericMin(q))
    }

    #[test]
    fn numeric_examples() {
        let s = dimension_score(&numeric("payload", Quantity::kg(400.0)), Some(&CapabilityValue::Quantity(Quantity::kg(500.0))), never).unwrap();
        assert_eq!(s.score, 0.9375);
        assert!(s.feasible && !s.adjudicated);

        let s = dimension_score(&numeric("reach", Quantity::m(2.0)), Some(&CapabilityValue::Quantity(Quantity::m(2.0))), never).unwrap();
        assert_eq!(s.score, 1.0);

        let s = dimension_score(&numeric("payload", Quantity::kg(400.0)), Some(&CapabilityValue::Quantity(Quantity::kg(100.0))), never).unwrap();
        assert_eq!(s.score, 0.0);
        assert!(!s.feasible);
    }

    #[test]
    fn saturating_over_capacity() {
        assert_eq!(numeric_score(800.0, 400.0), 0.75);
        assert_eq!(numeric_score(1e9, 400.0), 0.75);
        assert_eq!(numeric_score(0.0, 0.0), 1.0);
        assert_eq!(numeric_score(5.0, 0.0), 0.75);
    }

    #[test]
    fn terrain_rule() {
        let req = Requirement::new("terrain", RequirementKind::OrderedMin(TerrainLevel::Flat));
        let score = |cap| dimension_score(&req, Some(&CapabilityValue::Terrain(cap)), never).unwrap().score;
        assert_eq!(score(TerrainLevel::Uneven), 0.9);
        assert_eq!(score(TerrainLevel::Flat), 1.0);
        assert_eq!(score(TerrainLevel::Fixed), 0.0);
    }

    #[test]
    fn tools_rule() {
        let req = Requirement::new("tools", RequirementKind::ToolRequired("gripper".into()));
        let have = CapabilityValue::Tools(vec!["drill".into(), "gripper".into()]);
        let lack = CapabilityValue::Tools(vec!["drill".into()]);
        assert_eq!(dimension_score(&req, Some(&have), never).unwrap().score, 1.0);
        let s = dimension_score(&req, Some(&lack), never).unwrap();
        assert!(!s.feasible && s.score == 0.0);
    }

    #[test]
    fn mismatches_are_errors() {
        let req = numeric("payload", Quantity::kg(1.0));
        assert!(matches!(
            dimension_score(&req, Some(&CapabilityValue::Quantity(Quantity::m(1.0))), never),
            Err(SuitabilityError::UnitMismatch { .. })
        ));
        assert!(matches!(
            dimension_score(&req, Some(&CapabilityValue::Terrain(TerrainLevel::Flat)), never),
            Err(SuitabilityError::KindMismatch { .. })
        ));
    }

    #[test]
    fn absent_entry_is_adjudicated() {
        let req = numeric("payload", Quantity::kg(1.0));
        let s = dimension_score(&req, None, || DimensionScore {
            dimension: "payload".into(),
            score: 0.3,
            feasible: true,
            adjudicated: true,
            fallback: false,
        })
        .unwrap();
        assert!(s.adjudicated);
        assert_eq!(s.score, 0.3);
    }

    #[test]
    fn table1_pairs() {
        let s = parse_scenario(TABLE1).unwrap();
        let adj = Adjudicator::stub(0, FixtureTable::new());
        let a = pair_suitability(s.agent("A").unwrap(), &s.tasks[0], &adj).unwrap();
        assert!((a.overall - 0.979_166_666_666_666_6).abs() < 1e-12);
        let c = pair_suitability(s.agent("C").unwrap(), &s.tasks[0], &adj).unwrap();
        let scores: Vec<f64> = c.breakdown.iter().map(|d| d.score).collect();
        assert_eq!(scores, vec![0.96875, 0.9, 0.9]);
        assert!((c.overall - 0.922_916_666_666_666_7).abs() < 1e-12);
        let at2 = pair_suitability(s.agent("A").unwrap(), &s.tasks[1], &adj).unwrap();
        assert_eq!(at2.overall, 0.0);
        assert!(at2.structurally_infeasible());
        assert_eq!(adj.stats().requests, 0);
    }

    #[test]
    fn table1_matrix() {
        let s = parse_scenario(TABLE1).unwrap();
        let m = build_matrix(&s, &Adjudicator::stub(0, FixtureTable::new())).unwrap();
        let expected = [[0.979_166_7, 0.0], [0.0, 0.0], [0.922_916_7, 0.948_333_3]];
        for (a, row) in expected.iter().enumerate() {
            for (t, &e) in row.iter().enumerate() {
                assert!((m.overall(a, t) - e).abs() < 1e-6, "cell ({a},{t}) = {}", m.overall(a, t));
            }
        }
        assert_eq!(m.cells[1].agent_id, "A");
        assert_eq!(m.cells[1].task_id, "Transport Module");
    }

    #[test]
    fn zero_tasks() {
        let mut s = parse_scenario(TABLE1).unwrap();
        s.tasks.clear();
        let m = build_matrix(&s, &Adjudicator::stub(0, FixtureTable::new())).unwrap();
        assert_eq!((m.num_agents(), m.num_tasks(), m.cells.len()), (3, 0, 0));
    }

    #[test]
    fn weights_change_the_mean() {
        let s = parse_scenario(TABLE1).unwrap();
        let adj = Adjudicator::stub(0, FixtureTable::new());
        let weights: BTreeMap<String, f64> = [("payload".to_string(), 2.0)].into_iter().collect();
        let c = pair_suitability_weighted(s.agent("C").unwrap(), &s.tasks[0], &adj, &weights).unwrap();
        assert!((c.overall - (2.0 * 0.96875 + 0.9 + 0.9) / 4.0).abs() < 1e-12);
    }

    #[test]
    fn requirement_free_task_is_whole_pair() {
        let s = parse_scenario(TABLE1).unwrap();
        let adj = Adjudicator::stub(3, FixtureTable::new());
        let task = TaskDescription::new("Survey", crate::domain::Cell::new(1, 1));
        let p = pair_suitability(s.agent("A").unwrap(), &task, &adj).unwrap();
        assert_eq!(p.breakdown.len(), 1);
        assert_eq!(p.breakdown[0].dimension, "");
        assert!(p.breakdown[0].adjudicated);
    }
}
