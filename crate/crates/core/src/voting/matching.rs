//! Maximum-weight partial matching of tasks to agents.
//!
//! The objective is lexicographic: (1) number of assigned tasks whose weight
//! is positive, (2) total weight, (3) total raw suitability, and finally
//! (4) the smallest sequence of agent ids when tasks are read in id order
//! (an unassigned task sorts after every agent).
//!
//! Instances are solved exactly by memoized search over (task, used-agent set)
//! states. When the state space would be too large the solver falls back to a
//! Hungarian pass over lexicographic costs, which is exact on criteria 1–3 up
//! to floating-point rounding but does not apply criterion 4.

use std::cmp::Ordering;
use std::collections::HashMap;

use super::WeightMatrix;

/// Upper bound on memoized states before switching to the Hungarian fallback.
pub const EXACT_STATE_LIMIT: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Objective {
    pub positive: u32,
    pub weight: f64,
    pub raw: f64,
}

impl Objective {
    fn of(weight: f64, raw: f64) -> Self {
        Objective {
            positive: u32::from(weight > 0.0),
            weight,
            raw,
        }
    }

    fn plus(self, other: Objective) -> Objective {
        Objective {
            positive: self.positive + other.positive,
            weight: self.weight + other.weight,
            raw: self.raw + other.raw,
        }
    }

    pub fn cmp_lex(&self, other: &Objective) -> Ordering {
        self.positive
            .cmp(&other.positive)
            .then(self.weight.total_cmp(&other.weight))
            .then(self.raw.total_cmp(&other.raw))
    }
}

/// Task indices sorted by task id.
pub(crate) fn task_order(weights: &WeightMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.tasks.len()).collect();
    order.sort_by(|&a, &b| weights.tasks[a].cmp(&weights.tasks[b]).then(a.cmp(&b)));
    order
}

/// Agent indices sorted by agent id.
pub(crate) fn agent_order(weights: &WeightMatrix) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.agents.len()).collect();
    order.sort_by(|&a, &b| weights.agents[a].cmp(&weights.agents[b]).then(a.cmp(&b)));
    order
}

/// Objective value of a per-task choice vector, summed right-to-left in task-id order.
pub fn objective(weights: &WeightMatrix, choice: &[Option<usize>]) -> Objective {
    task_order(weights)
        .into_iter()
        .rev()
        .fold(Objective::default(), |acc, t| match choice[t] {
            Some(a) => Objective::of(weights.weight(a, t).unwrap_or(f64::NEG_INFINITY), weights.raw[a][t]).plus(acc),
            None => acc,
        })
}

/// Best assignment under the lexicographic objective. Returns the chosen
/// agent index per task (in matrix task order).
pub fn match_max_weight(weights: &WeightMatrix) -> Vec<Option<usize>> {
    if estimated_states(weights) <= EXACT_STATE_LIMIT {
        ExactSolver::new(weights).solve()
    } else {
        hungarian(weights)
    }
}

fn estimated_states(weights: &WeightMatrix) -> u128 {
    let n = (0..weights.agents.len())
        .filter(|&a| (0..weights.tasks.len()).any(|t| weights.weight(a, t).is_some()))
        .count() as u128;
    let m = weights.tasks.len() as u128;
    if n > 64 {
        return u128::MAX;
    }
    // Σ_{j≤m} Σ_{k≤min(j,n)} C(n,k), saturating.
    let mut binom = vec![1u128; 1];
    let mut prefix = vec![1u128];
    for k in 1..=n {
        let c = binom[(k - 1) as usize].saturating_mul(n - k + 1) / k;
        binom.push(c);
        prefix.push(prefix[(k - 1) as usize].saturating_add(c));
    }
    (0..=m).fold(0u128, |acc, j| acc.saturating_add(prefix[j.min(n) as usize]))
}

struct ExactSolver<'a> {
    weights: &'a WeightMatrix,
    tasks: Vec<usize>,
    /// Per task (in id order): candidate (agent bit, agent index), agents in id order.
    candidates: Vec<Vec<(u32, usize)>>,
    memo: HashMap<(usize, u64), Objective>,
}

impl<'a> ExactSolver<'a> {
    fn new(weights: &'a WeightMatrix) -> Self {
        let tasks = task_order(weights);
        let mut bit_of = HashMap::new();
        for a in agent_order(weights) {
            if (0..weights.tasks.len()).any(|t| weights.weight(a, t).is_some()) {
                let next = bit_of.len() as u32;
                bit_of.insert(a, next);
            }
        }
        let agents_sorted = agent_order(weights);
        let candidates = tasks
            .iter()
            .map(|&t| {
                agents_sorted
                    .iter()
                    .filter(|&&a| weights.weight(a, t).is_some())
                    .map(|&a| (bit_of[&a], a))
                    .collect()
            })
            .collect();
        ExactSolver {
            weights,
            tasks,
            candidates,
            memo: HashMap::new(),
        }
    }

    fn gain(&self, j: usize, agent: usize) -> Objective {
        let t = self.tasks[j];
        Objective::of(self.weights.weight(agent, t).expect("candidate is feasible"), self.weights.raw[agent][t])
    }

    fn best(&mut self, j: usize, used: u64) -> Objective {
        if j == self.tasks.len() {
            return Objective::default();
        }
        if let Some(&v) = self.memo.get(&(j, used)) {
            return v;
        }
        let mut best = self.best(j + 1, used);
        for i in 0..self.candidates[j].len() {
            let (bit, agent) = self.candidates[j][i];
            if used & (1 << bit) != 0 {
                continue;
            }
            let v = self.gain(j, agent).plus(self.best(j + 1, used | (1 << bit)));
            if v.cmp_lex(&best) == Ordering::Greater {
                best = v;
            }
        }
        self.memo.insert((j, used), best);
        best
    }

    fn solve(mut self) -> Vec<Option<usize>> {
        let mut choice = vec![None; self.weights.tasks.len()];
        let mut used = 0u64;
        for j in 0..self.tasks.len() {
            let target = self.best(j, used);
            // First agent (in id order) that attains the optimum; unassigned last.
            let mut picked = None;
            for i in 0..self.candidates[j].len() {
                let (bit, agent) = self.candidates[j][i];
                if used & (1 << bit) != 0 {
                    continue;
                }
                let v = self.gain(j, agent).plus(self.best(j + 1, used | (1 << bit)));
                if v.cmp_lex(&target) == Ordering::Equal {
                    picked = Some((bit, agent));
                    break;
                }
            }
            if let Some((bit, agent)) = picked {
                used |= 1 << bit;
                choice[self.tasks[j]] = Some(agent);
            }
        }
        choice
    }
}

/// Lexicographic cost used by the Hungarian fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Lex(i64, f64, f64);

impl Lex {
    const ZERO: Lex = Lex(0, 0.0, 0.0);
    const INF: Lex = Lex(i64::MAX / 4, 0.0, 0.0);

    fn add(self, o: Lex) -> Lex {
        Lex(self.0 + o.0, self.1 + o.1, self.2 + o.2)
    }

    fn sub(self, o: Lex) -> Lex {
        Lex(self.0 - o.0, self.1 - o.1, self.2 - o.2)
    }

    fn lt(self, o: Lex) -> bool {
        self.0
            .cmp(&o.0)
            .then(self.1.total_cmp(&o.1))
            .then(self.2.total_cmp(&o.2))
            == Ordering::Less
    }
}

/// Kuhn–Munkres over tasks (rows) and agents plus one "unassigned" column per task.
fn hungarian(weights: &WeightMatrix) -> Vec<Option<usize>> {
    let m = weights.tasks.len();
    let n = weights.agents.len();
    if m == 0 {
        return Vec::new();
    }
    let cols = n + m;
    let forbidden = Lex(m as i64 + 1, 0.0, 0.0);
    let cost = |row: usize, col: usize| -> Lex {
        if col >= n {
            return Lex::ZERO;
        }
        match weights.weight(col, row) {
            Some(w) => Lex(-i64::from(w > 0.0), -w, -weights.raw[col][row]),
            None => forbidden,
        }
    };

    // 1-based potentials and matching, following the classic O(n^2 m) formulation.
    let mut u = vec![Lex::ZERO; m + 1];
    let mut v = vec![Lex::ZERO; cols + 1];
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![Lex::INF; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = Lex::INF;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1).sub(u[i0]).sub(v[j]);
                if cur.lt(minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j].lt(delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] = u[p[j]].add(delta);
                    v[j] = v[j].sub(delta);
                } else {
                    minv[j] = minv[j].sub(delta);
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut choice = vec![None; m];
    for j in 1..=n {
        if p[j] != 0 && weights.weight(j - 1, p[j] - 1).is_some() {
            choice[p[j] - 1] = Some(j - 1);
        }
    }
    choice
}

#[cfg(test)]
pub(crate) fn hungarian_for_tests(weights: &WeightMatrix) -> Vec<Option<usize>> {
    hungarian(weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wm(agents: &[&str], tasks: &[&str], w: Vec<Vec<Option<f64>>>, raw: Vec<Vec<f64>>) -> WeightMatrix {
        WeightMatrix {
            agents: agents.iter().map(|s| s.to_string()).collect(),
            tasks: tasks.iter().map(|s| s.to_string()).collect(),
            weights: w,
            raw,
        }
    }

    #[test]
    fn table1_raw_weights() {
        let raw = vec![vec![0.979_166_7, 0.0], vec![0.0, 0.0], vec![0.922_916_7, 0.948_333_3]];
        let w = raw
            .iter()
            .map(|r| r.iter().map(|&s| (s > 0.0).then_some(s)).collect())
            .collect();
        let m = wm(&["A", "B", "C"], &["Place Wall Panel", "Transport Module"], w, raw);
        assert_eq!(match_max_weight(&m), vec![Some(0), Some(2)]);
        assert_eq!(hungarian_for_tests(&m), vec![Some(0), Some(2)]);
    }

    #[test]
    fn single_pair() {
        let m = wm(&["A"], &["T"], vec![vec![Some(0.4)]], vec![vec![0.4]]);
        assert_eq!(match_max_weight(&m), vec![Some(0)]);
    }

    #[test]
    fn tie_goes_to_smaller_task_id() {
        let m = wm(&["A"], &["T2", "T1"], vec![vec![Some(1.0), Some(1.0)]], vec![vec![0.8, 0.8]]);
        assert_eq!(match_max_weight(&m), vec![None, Some(0)]);
    }

    #[test]
    fn tie_goes_to_smaller_agent_id() {
        let m = wm(&["B", "A"], &["T"], vec![vec![Some(1.0)], vec![Some(1.0)]], vec![vec![0.5], vec![0.5]]);
        assert_eq!(match_max_weight(&m), vec![Some(1)]);
    }

    #[test]
    fn zero_weight_pairs_fill_by_raw() {
        let m = wm(
            &["A", "B"],
            &["T1", "T2"],
            vec![vec![Some(1.0), Some(0.0)], vec![None, Some(0.0)]],
            vec![vec![0.9, 0.8], vec![0.0, 0.3]],
        );
        assert_eq!(match_max_weight(&m), vec![Some(0), Some(1)]);
    }

    #[test]
    fn nothing_feasible() {
        let m = wm(&["A"], &["T"], vec![vec![None]], vec![vec![0.0]]);
        assert_eq!(match_max_weight(&m), vec![None]);
        let empty = wm(&["A"], &[], vec![vec![]], vec![vec![]]);
        assert!(match_max_weight(&empty).is_empty());
    }

    #[test]
    fn state_estimate_grows_with_size() {
        let big = |n: usize, m: usize| {
            wm(
                &vec!["a"; n],
                &vec!["t"; m],
                vec![vec![Some(1.0); m]; n],
                vec![vec![1.0; m]; n],
            )
        };
        assert!(estimated_states(&big(6, 6)) < 1000);
        assert!(estimated_states(&big(40, 40)) > EXACT_STATE_LIMIT);
    }
}
