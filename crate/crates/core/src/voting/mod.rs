//! Committee allocation: six voting methods each propose a conflict-free
//! assignment, and the consensus maximizes per-pair vote tallies.

mod matching;
mod transform;

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::suitability::SuitabilityMatrix;

pub use matching::{match_max_weight, objective, Objective, EXACT_STATE_LIMIT};
pub use transform::transform_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodId {
    Range,
    Borda,
    Approval,
    Majority,
    Copeland,
    #[serde(rename = "IRV")]
    Irv,
}

impl MethodId {
    pub const ALL: [MethodId; 6] = [
        MethodId::Range,
        MethodId::Borda,
        MethodId::Approval,
        MethodId::Majority,
        MethodId::Copeland,
        MethodId::Irv,
    ];
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MethodId::Range => "Range",
            MethodId::Borda => "Borda",
            MethodId::Approval => "Approval",
            MethodId::Majority => "Majority",
            MethodId::Copeland => "Copeland",
            MethodId::Irv => "IRV",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VotingParams {
    /// Approval cutoff on overall suitability.
    pub approval_threshold: f64,
}

impl Default for VotingParams {
    fn default() -> Self {
        VotingParams { approval_threshold: 0.7 }
    }
}

/// Method weights per (agent, task); `None` marks an infeasible, never-assignable pair.
/// Also carries the raw suitability used for tie-breaking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    pub agents: Vec<String>,
    pub tasks: Vec<String>,
    pub weights: Vec<Vec<Option<f64>>>,
    #[serde(skip)]
    pub raw: Vec<Vec<f64>>,
}

impl WeightMatrix {
    pub fn weight(&self, agent: usize, task: usize) -> Option<f64> {
        self.weights[agent][task]
    }
}

/// Partial task → agent map. Keys are task ids.
pub type Assignment = BTreeMap<String, String>;

fn to_assignment(agents: &[String], tasks: &[String], choice: &[Option<usize>]) -> Assignment {
    choice
        .iter()
        .enumerate()
        .filter_map(|(t, a)| a.map(|a| (tasks[t].clone(), agents[a].clone())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ballot {
    pub method: MethodId,
    /// Chosen agent per task, aligned with the matrix task order; `None` abstains.
    pub choices: Vec<Option<String>>,
    pub weights: WeightMatrix,
}

impl Ballot {
    pub fn assignment(&self) -> Assignment {
        self.weights
            .tasks
            .iter()
            .zip(&self.choices)
            .filter_map(|(t, a)| a.as_ref().map(|a| (t.clone(), a.clone())))
            .collect()
    }
}

/// One method's proposal: its weights, matched.
pub fn method_ballot(method: MethodId, matrix: &SuitabilityMatrix, params: &VotingParams) -> Ballot {
    let weights = transform_weights(method, matrix, params);
    let choice = match_max_weight(&weights);
    Ballot {
        method,
        choices: choice.iter().map(|a| a.map(|a| matrix.agents[a].clone())).collect(),
        weights,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    #[serde(rename = "final")]
    pub final_assignment: Assignment,
    pub ballots: Vec<Ballot>,
    /// Votes per (agent, task), agent-major, aligned with the matrix order.
    pub tallies: Vec<Vec<u32>>,
    pub unassigned_tasks: Vec<String>,
    pub idle_agents: Vec<String>,
}

impl AllocationResult {
    pub fn tally(&self, matrix: &SuitabilityMatrix, agent: &str, task: &str) -> Option<u32> {
        Some(self.tallies[matrix.agent_index(agent)?][matrix.task_index(task)?])
    }
}

/// Recounts votes per (agent, task) from ballots.
pub fn count_tallies(matrix: &SuitabilityMatrix, ballots: &[Ballot]) -> Vec<Vec<u32>> {
    let mut tallies = vec![vec![0u32; matrix.num_tasks()]; matrix.num_agents()];
    for b in ballots {
        for (t, choice) in b.choices.iter().enumerate() {
            if let Some(a) = choice.as_ref().and_then(|id| matrix.agent_index(id)) {
                tallies[a][t] += 1;
            }
        }
    }
    tallies
}

/// Runs all six methods and matches on their tallies (raw suitability breaks ties).
pub fn consensus_allocate(matrix: &SuitabilityMatrix, params: &VotingParams) -> AllocationResult {
    let ballots: Vec<Ballot> = MethodId::ALL
        .par_iter()
        .map(|&m| method_ballot(m, matrix, params))
        .collect();
    let tallies = count_tallies(matrix, &ballots);
    let weights = WeightMatrix {
        agents: matrix.agents.clone(),
        tasks: matrix.tasks.clone(),
        weights: tallies
            .iter()
            .enumerate()
            .map(|(a, row)| {
                row.iter()
                    .enumerate()
                    .map(|(t, &v)| (v > 0 && matrix.is_feasible(a, t)).then_some(f64::from(v)))
                    .collect()
            })
            .collect(),
        raw: matrix.overall_rows(),
    };
    let choice = match_max_weight(&weights);
    let final_assignment = to_assignment(&matrix.agents, &matrix.tasks, &choice);
    let unassigned_tasks = matrix
        .tasks
        .iter()
        .filter(|t| !final_assignment.contains_key(*t))
        .cloned()
        .collect();
    let busy: std::collections::HashSet<&String> = final_assignment.values().collect();
    let idle_agents = matrix.agents.iter().filter(|a| !busy.contains(a)).cloned().collect();
    AllocationResult {
        final_assignment,
        ballots,
        tallies,
        unassigned_tasks,
        idle_agents,
    }
}

/// True if every pair is feasible in `matrix` and no agent holds two tasks.
pub fn is_valid_assignment(matrix: &SuitabilityMatrix, assignment: &Assignment) -> bool {
    let mut seen = std::collections::HashSet::new();
    assignment.iter().all(|(t, a)| {
        match (matrix.agent_index(a), matrix.task_index(t)) {
            (Some(ai), Some(ti)) => matrix.is_feasible(ai, ti) && seen.insert(a.clone()),
            _ => false,
        }
    })
}
