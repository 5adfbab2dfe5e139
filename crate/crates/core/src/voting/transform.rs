use std::cmp::Ordering;

use super::{MethodId, VotingParams, WeightMatrix};
use crate::suitability::SuitabilityMatrix;

/// Per-method weights over the matrix. Infeasible pairs stay `None` for every method.
pub fn transform_weights(method: MethodId, matrix: &SuitabilityMatrix, params: &VotingParams) -> WeightMatrix {
    let (n, m) = (matrix.num_agents(), matrix.num_tasks());
    let mut weights = vec![vec![None; m]; n];
    for t in 0..m {
        let feasible: Vec<usize> = (0..n).filter(|&a| matrix.is_feasible(a, t)).collect();
        let column = match method {
            MethodId::Range => feasible.iter().map(|&a| matrix.overall(a, t)).collect(),
            MethodId::Borda => borda(matrix, t, &feasible),
            MethodId::Approval => feasible
                .iter()
                .map(|&a| if matrix.overall(a, t) >= params.approval_threshold { 1.0 } else { 0.0 })
                .collect(),
            MethodId::Majority => majority(matrix, t, &feasible),
            MethodId::Copeland => copeland(matrix, t, &feasible),
            MethodId::Irv => irv(matrix, t, &feasible),
        };
        for (&a, w) in feasible.iter().zip(column) {
            weights[a][t] = Some(w);
        }
    }
    WeightMatrix {
        agents: matrix.agents.clone(),
        tasks: matrix.tasks.clone(),
        weights,
        raw: matrix.overall_rows(),
    }
}

/// `k - 1 - rank` points, where rank counts strictly better agents (ties share the higher value).
fn borda(matrix: &SuitabilityMatrix, t: usize, feasible: &[usize]) -> Vec<f64> {
    let k = feasible.len();
    feasible
        .iter()
        .map(|&a| {
            let s = matrix.overall(a, t);
            let better = feasible.iter().filter(|&&b| matrix.overall(b, t) > s).count();
            (k - 1 - better) as f64
        })
        .collect()
}

/// Index (into `feasible`) of the best-scoring agent; ties go to the smaller agent id.
fn top_agent(matrix: &SuitabilityMatrix, t: usize, candidates: &[usize]) -> Option<usize> {
    (0..candidates.len()).max_by(|&i, &j| {
        let (a, b) = (candidates[i], candidates[j]);
        matrix
            .overall(a, t)
            .total_cmp(&matrix.overall(b, t))
            .then_with(|| matrix.agents[b].cmp(&matrix.agents[a]))
    })
}

/// The top agent keeps its score only if it holds a strict majority of the column's score mass.
fn majority(matrix: &SuitabilityMatrix, t: usize, feasible: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; feasible.len()];
    let total: f64 = feasible.iter().map(|&a| matrix.overall(a, t)).sum();
    if let Some(i) = top_agent(matrix, t, feasible) {
        let s = matrix.overall(feasible[i], t);
        if s > 0.5 * total {
            out[i] = s;
        }
    }
    out
}

/// True if `a` scores higher than `b` on a strict majority of the task's dimensions.
pub(crate) fn beats_dimensionwise(matrix: &SuitabilityMatrix, a: usize, b: usize, t: usize) -> bool {
    let (da, db) = (&matrix.cell(a, t).breakdown, &matrix.cell(b, t).breakdown);
    let dims = da.len().min(db.len());
    let wins = da
        .iter()
        .zip(db)
        .filter(|(x, y)| x.score.partial_cmp(&y.score) == Some(Ordering::Greater))
        .count();
    2 * wins > dims
}

/// Pairwise wins minus losses, shifted by `k - 1` so the weakest possible record scores 0.
fn copeland(matrix: &SuitabilityMatrix, t: usize, feasible: &[usize]) -> Vec<f64> {
    let k = feasible.len() as i64;
    feasible
        .iter()
        .map(|&a| {
            let mut net = 0i64;
            for &b in feasible.iter().filter(|&&b| b != a) {
                if beats_dimensionwise(matrix, a, b, t) {
                    net += 1;
                } else if beats_dimensionwise(matrix, b, a, t) {
                    net -= 1;
                }
            }
            (net + k - 1) as f64
        })
        .collect()
}

/// Eliminates the weakest remaining agent until one holds a strict majority
/// of the remaining score mass. The survivor gets weight 1.
fn irv(matrix: &SuitabilityMatrix, t: usize, feasible: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; feasible.len()];
    let mut remaining: Vec<usize> = (0..feasible.len()).collect();
    while !remaining.is_empty() {
        let agents: Vec<usize> = remaining.iter().map(|&i| feasible[i]).collect();
        let mass: f64 = agents.iter().map(|&a| matrix.overall(a, t)).sum();
        let top = top_agent(matrix, t, &agents).expect("non-empty");
        if remaining.len() == 1 || matrix.overall(agents[top], t) > 0.5 * mass {
            out[remaining[top]] = 1.0;
            break;
        }
        // Weakest score; among equals, drop the larger agent id first.
        let worst = (0..agents.len())
            .min_by(|&i, &j| {
                matrix
                    .overall(agents[i], t)
                    .total_cmp(&matrix.overall(agents[j], t))
                    .then_with(|| matrix.agents[agents[j]].cmp(&matrix.agents[agents[i]]))
            })
            .expect("non-empty");
        remaining.remove(worst);
    }
    out
}
