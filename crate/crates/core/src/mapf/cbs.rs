//! Conflict-Based Search, optimal (`w = 1`) and bounded-suboptimal (`w > 1`, ECBS-style).

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashSet};

use super::astar::{plan, plan_focal, ConstraintTable, LowLevel};
use super::{count_conflicts, detect_conflict, split_conflict, CbsError, Constraint, Path, PlanError, SearchStats, Solution};
use crate::domain::{Cell, GridMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbsOptions {
    /// Suboptimality factor; 1 means optimal CBS.
    pub w: f64,
    /// Longest path considered; defaults to 4 × width × height.
    pub horizon: Option<usize>,
    /// CT node expansions before giving up.
    pub max_ct_nodes: usize,
}

impl Default for CbsOptions {
    fn default() -> Self {
        CbsOptions {
            w: 1.0,
            horizon: None,
            max_ct_nodes: 100_000,
        }
    }
}

impl CbsOptions {
    pub fn with_w(w: f64) -> Self {
        CbsOptions { w, ..Self::default() }
    }

    pub fn horizon_for(&self, grid: &GridMap) -> usize {
        self.horizon.unwrap_or(4 * grid.num_cells())
    }
}

/// Constraint-tree node.
#[derive(Debug, Clone)]
pub struct CtNode {
    pub constraints: Vec<Constraint>,
    pub paths: Vec<Path>,
    /// Per-agent lower bounds on the constrained optimum (equal to path costs when `w = 1`).
    pub lower_bounds: Vec<usize>,
    pub soc: usize,
    pub lb: usize,
    pub conflicts: usize,
}

impl CtNode {
    fn finish(constraints: Vec<Constraint>, paths: Vec<Path>, lower_bounds: Vec<usize>) -> Self {
        CtNode {
            soc: paths.iter().map(Path::cost).sum(),
            lb: lower_bounds.iter().sum(),
            conflicts: count_conflicts(&paths),
            constraints,
            paths,
            lower_bounds,
        }
    }
}

struct Planner<'a> {
    grid: &'a GridMap,
    starts: &'a [Cell],
    goals: &'a [Cell],
    w: f64,
    horizon: usize,
    stats: SearchStats,
}

impl Planner<'_> {
    fn low_level(&mut self, agent: usize, constraints: &[Constraint], paths: &[Path]) -> Result<LowLevel, PlanError> {
        let table = ConstraintTable::new(self.goals[agent], constraints.iter().filter(|c| c.agent == agent));
        let result = if self.w > 1.0 {
            let others: Vec<&Path> = paths.iter().enumerate().filter(|&(i, _)| i != agent).map(|(_, p)| p).collect();
            plan_focal(self.grid, self.starts[agent], self.goals[agent], &table, self.horizon, agent, self.w, &others)
        } else {
            plan(self.grid, self.starts[agent], self.goals[agent], &table, self.horizon, agent)
        };
        if let Ok(r) = &result {
            self.stats.low_level_expansions += r.expansions;
        }
        result
    }

    fn root(&mut self) -> Result<CtNode, PlanError> {
        let mut paths: Vec<Path> = Vec::with_capacity(self.starts.len());
        let mut lbs = Vec::with_capacity(self.starts.len());
        for agent in 0..self.starts.len() {
            let r = self.low_level(agent, &[], &paths)?;
            paths.push(r.path);
            lbs.push(r.lower_bound);
        }
        Ok(CtNode::finish(Vec::new(), paths, lbs))
    }

    fn children(&mut self, node: &CtNode) -> Vec<CtNode> {
        let conflict = detect_conflict(&node.paths).expect("children of a conflicting node");
        self.stats.conflicts_resolved += 1;
        let mut out = Vec::with_capacity(2);
        for constraint in split_conflict(&conflict) {
            let mut constraints = node.constraints.clone();
            constraints.push(constraint);
            let agent = constraint.agent;
            if let Ok(r) = self.low_level(agent, &constraints, &node.paths) {
                let mut paths = node.paths.clone();
                let mut lbs = node.lower_bounds.clone();
                paths[agent] = r.path;
                lbs[agent] = r.lower_bound;
                out.push(CtNode::finish(constraints, paths, lbs));
            }
        }
        self.stats.ct_nodes_generated += out.len();
        out
    }

    fn solution(&self, node: CtNode) -> Solution {
        Solution {
            makespan: node.paths.iter().map(Path::cost).max().unwrap_or(0),
            soc: node.soc,
            paths: node.paths,
            stats: self.stats,
        }
    }
}

fn check_input(grid: &GridMap, starts: &[Cell], goals: &[Cell], w: f64) -> Result<(), CbsError> {
    let invalid = |m: String| Err(CbsError::InvalidInput(m));
    if starts.len() != goals.len() {
        return invalid(format!("{} starts but {} goals", starts.len(), goals.len()));
    }
    if !(w >= 1.0 && w.is_finite()) {
        return invalid(format!("suboptimality factor must be >= 1, got {w}"));
    }
    for (role, cells) in [("start", starts), ("goal", goals)] {
        let mut seen = HashSet::new();
        for (i, &c) in cells.iter().enumerate() {
            if !grid.is_free(c) {
                return invalid(format!("{role} {c} of agent {i} is not a free cell"));
            }
            if !seen.insert(c) {
                return invalid(format!("{role} {c} is shared by several agents"));
            }
        }
    }
    Ok(())
}

/// Plans conflict-free paths for all agents. With `w = 1` the sum of costs is
/// optimal; with `w > 1` it is at most `w` times optimal.
pub fn cbs_solve(grid: &GridMap, starts: &[Cell], goals: &[Cell], options: &CbsOptions) -> Result<Solution, CbsError> {
    check_input(grid, starts, goals, options.w)?;
    let mut planner = Planner {
        grid,
        starts,
        goals,
        w: options.w,
        horizon: options.horizon_for(grid),
        stats: SearchStats::default(),
    };
    let root = planner.root().map_err(|e| CbsError::Unsolvable {
        reason: e.to_string(),
        stats: planner.stats,
    })?;
    planner.stats.ct_nodes_generated = 1;
    if options.w > 1.0 {
        solve_focal(planner, root, options)
    } else {
        solve_best_first(planner, root, options)
    }
}

fn exhausted(planner: &Planner<'_>, limit_hit: bool) -> CbsError {
    CbsError::Unsolvable {
        reason: if limit_hit {
            "CT node limit reached".to_string()
        } else {
            "constraint tree exhausted".to_string()
        },
        stats: planner.stats,
    }
}

fn solve_best_first(mut planner: Planner<'_>, root: CtNode, options: &CbsOptions) -> Result<Solution, CbsError> {
    // Ordered by (SOC, conflict count, insertion order).
    let mut nodes = vec![Some(root)];
    let mut open = BinaryHeap::new();
    open.push(Reverse((nodes[0].as_ref().map_or(0, |n| n.soc), nodes[0].as_ref().map_or(0, |n| n.conflicts), 0usize)));
    while let Some(Reverse((_, _, id))) = open.pop() {
        if planner.stats.ct_nodes_expanded >= options.max_ct_nodes {
            return Err(exhausted(&planner, true));
        }
        let node = nodes[id].take().expect("each node is expanded once");
        planner.stats.ct_nodes_expanded += 1;
        if node.conflicts == 0 {
            return Ok(planner.solution(node));
        }
        for child in planner.children(&node) {
            open.push(Reverse((child.soc, child.conflicts, nodes.len())));
            nodes.push(Some(child));
        }
    }
    Err(exhausted(&planner, false))
}

fn solve_focal(mut planner: Planner<'_>, root: CtNode, options: &CbsOptions) -> Result<Solution, CbsError> {
    let w = options.w;
    let mut nodes: BTreeMap<usize, CtNode> = BTreeMap::new();
    let mut by_lb: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut next_id = 0;
    by_lb.insert((root.lb, next_id));
    nodes.insert(next_id, root);
    next_id += 1;
    while let Some(&(lb_min, _)) = by_lb.first() {
        if planner.stats.ct_nodes_expanded >= options.max_ct_nodes {
            return Err(exhausted(&planner, true));
        }
        let bound = w * lb_min as f64;
        // FOCAL: SOC within the bound; prefer fewest conflicts, then SOC, then age.
        let id = nodes
            .iter()
            .filter(|(_, n)| n.soc as f64 <= bound)
            .min_by_key(|(&id, n)| (n.conflicts, n.soc, id))
            .map(|(&id, _)| id)
            .unwrap_or_else(|| by_lb.first().expect("open is non-empty").1);
        let node = nodes.remove(&id).expect("selected node is open");
        by_lb.remove(&(node.lb, id));
        planner.stats.ct_nodes_expanded += 1;
        if node.conflicts == 0 {
            return Ok(planner.solution(node));
        }
        for child in planner.children(&node) {
            by_lb.insert((child.lb, next_id));
            nodes.insert(next_id, child);
            next_id += 1;
        }
    }
    Err(exhausted(&planner, false))
}

/// Re-plans from the positions reached at time `t` of `current`, on a possibly changed grid.
pub fn replan(
    grid: &GridMap,
    current: &Solution,
    t: usize,
    goals: &[Cell],
    options: &CbsOptions,
) -> Result<Solution, CbsError> {
    let starts: Vec<Cell> = current.paths.iter().map(|p| p.at(t)).collect();
    cbs_solve(grid, &starts, goals, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::parse_grid_map;
    use crate::mapf::{oracle_joint_bfs, path_is_valid};

    fn c(x: usize, y: usize) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn single_agent() {
        let g = GridMap::empty(3, 3);
        let s = cbs_solve(&g, &[c(0, 0)], &[c(2, 2)], &CbsOptions::default()).unwrap();
        assert_eq!(s.soc, 4);
        assert_eq!(s.stats.ct_nodes_expanded, 1);
    }

    #[test]
    fn corridor_with_nook() {
        let g = parse_grid_map("....\n@.@@").unwrap();
        let starts = [c(0, 0), c(3, 0)];
        let goals = [c(3, 0), c(0, 0)];
        let oracle = oracle_joint_bfs(&g, &starts, &goals).unwrap();
        let s = cbs_solve(&g, &starts, &goals, &CbsOptions::default()).unwrap();
        assert_eq!(s.soc, oracle);
        assert!(detect_conflict(&s.paths).is_none());
        for (i, p) in s.paths.iter().enumerate() {
            assert!(path_is_valid(&g, p, starts[i], goals[i]));
        }
    }

    #[test]
    fn crossing_needs_one_wait() {
        let g = GridMap::empty(4, 4);
        let starts = [c(1, 0), c(0, 1)];
        let goals = [c(1, 3), c(3, 1)];
        let individual: usize = starts.iter().zip(&goals).map(|(s, g)| s.manhattan(*g)).sum();
        let s = cbs_solve(&g, &starts, &goals, &CbsOptions::default()).unwrap();
        assert_eq!(oracle_joint_bfs(&g, &starts, &goals).unwrap(), individual + 1);
        assert_eq!(s.soc, individual + 1);
    }

    #[test]
    fn swap_without_room_is_unsolvable() {
        let g = parse_grid_map("..").unwrap();
        let opts = CbsOptions {
            max_ct_nodes: 2_000,
            ..CbsOptions::default()
        };
        assert!(matches!(
            cbs_solve(&g, &[c(0, 0), c(1, 0)], &[c(1, 0), c(0, 0)], &opts),
            Err(CbsError::Unsolvable { .. })
        ));
    }

    #[test]
    fn rejects_bad_input() {
        let g = parse_grid_map("..@").unwrap();
        let o = CbsOptions::default();
        assert!(matches!(cbs_solve(&g, &[c(0, 0)], &[c(2, 0)], &o), Err(CbsError::InvalidInput(_))));
        assert!(matches!(cbs_solve(&g, &[c(0, 0), c(0, 0)], &[c(1, 0), c(0, 0)], &o), Err(CbsError::InvalidInput(_))));
        assert!(matches!(cbs_solve(&g, &[c(0, 0)], &[c(1, 0)], &CbsOptions::with_w(0.5)), Err(CbsError::InvalidInput(_))));
    }

    #[test]
    fn no_agents() {
        let s = cbs_solve(&GridMap::empty(2, 2), &[], &[], &CbsOptions::default()).unwrap();
        assert_eq!((s.soc, s.makespan, s.paths.len()), (0, 0, 0));
    }

    #[test]
    fn ecbs_on_crossing() {
        let g = GridMap::empty(4, 4);
        let starts = [c(1, 0), c(0, 1)];
        let goals = [c(1, 3), c(3, 1)];
        let s = cbs_solve(&g, &starts, &goals, &CbsOptions::with_w(1.5)).unwrap();
        assert!(detect_conflict(&s.paths).is_none());
        assert!(s.soc as f64 <= 1.5 * 7.0);
    }

    #[test]
    fn deterministic() {
        let g = parse_grid_map(".....\n.@.@.\n.....\n.@.@.\n.....").unwrap();
        let starts = [c(0, 0), c(4, 0), c(2, 4)];
        let goals = [c(4, 4), c(0, 4), c(2, 0)];
        for w in [1.0, 1.5] {
            let a = cbs_solve(&g, &starts, &goals, &CbsOptions::with_w(w)).unwrap();
            let b = cbs_solve(&g, &starts, &goals, &CbsOptions::with_w(w)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn replan_after_new_obstacle() {
        let mut g = GridMap::empty(5, 3);
        let starts = [c(0, 1), c(4, 1)];
        let goals = [c(4, 1), c(0, 1)];
        let first = cbs_solve(&g, &starts, &goals, &CbsOptions::default()).unwrap();
        g.set_blocked(c(2, 0), true);
        let again = replan(&g, &first, 1, &goals, &CbsOptions::default()).unwrap();
        assert!(detect_conflict(&again.paths).is_none());
        assert_eq!(again.paths[0].start(), first.paths[0].at(1));
    }
}
