//! Single-agent space-time search under CBS constraints.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use super::{Constraint, ConstraintKind, Path, PlanError};
use crate::domain::{Cell, GridMap};

/// Constraints of one agent, indexed for lookup during search.
#[derive(Debug, Clone, Default)]
pub struct ConstraintTable {
    vertex: HashSet<(Cell, usize)>,
    edge: HashSet<(Cell, Cell, usize)>,
    /// Latest time at which the goal is forbidden (arrival must come after it).
    goal_block: Option<usize>,
    /// First timestep after which no constraint applies.
    settled: usize,
}

impl ConstraintTable {
    pub fn new<'a>(goal: Cell, constraints: impl IntoIterator<Item = &'a Constraint>) -> Self {
        let mut table = ConstraintTable::default();
        for c in constraints {
            match c.kind {
                ConstraintKind::Vertex { cell, t } => {
                    table.vertex.insert((cell, t));
                    table.settled = table.settled.max(t + 1);
                    if cell == goal {
                        table.goal_block = Some(table.goal_block.map_or(t, |g| g.max(t)));
                    }
                }
                ConstraintKind::Edge { from, to, t } => {
                    table.edge.insert((from, to, t));
                    table.settled = table.settled.max(t + 2);
                }
            }
        }
        table
    }

    fn allows(&self, from: Cell, to: Cell, t: usize) -> bool {
        !self.vertex.contains(&(to, t + 1)) && !self.edge.contains(&(from, to, t))
    }

    /// Earliest time at which the agent may finish at its goal.
    fn earliest_finish(&self) -> usize {
        self.goal_block.map_or(0, |t| t + 1)
    }
}

/// Result of a low-level search.
#[derive(Debug, Clone)]
pub(crate) struct LowLevel {
    pub path: Path,
    /// Lower bound on the optimal cost under the same constraints.
    pub lower_bound: usize,
    pub expansions: usize,
}

#[derive(Clone, Copy)]
struct Node {
    cell: Cell,
    t: usize,
    parent: Option<usize>,
    conflicts: usize,
}

fn successors(grid: &GridMap, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
    std::iter::once(cell).chain(grid.neighbors(cell))
}

fn reconstruct(nodes: &[Node], mut i: usize) -> Path {
    let mut cells = vec![nodes[i].cell];
    while let Some(p) = nodes[i].parent {
        cells.push(nodes[p].cell);
        i = p;
    }
    cells.reverse();
    Path::new(cells)
}

fn heuristic(cell: Cell, t: usize, goal: Cell, earliest_finish: usize) -> usize {
    cell.manhattan(goal).max(earliest_finish.saturating_sub(t))
}

fn check_endpoints(grid: &GridMap, start: Cell, goal: Cell) -> Result<(), PlanError> {
    for (what, c) in [("start", start), ("goal", goal)] {
        if !grid.is_free(c) {
            return Err(PlanError::InvalidInput(format!("{what} {c} is not a free cell")));
        }
    }
    Ok(())
}

/// Minimum-cost timed path from `start` to `goal` honouring `constraints`
/// (all of which are taken to apply to this agent).
///
/// Manhattan heuristic; successors are generated in the order wait, N, E, S, W
/// and equal-priority nodes pop deepest-first, then in generation order.
pub fn astar_spacetime(
    grid: &GridMap,
    start: Cell,
    goal: Cell,
    constraints: &[Constraint],
    horizon: usize,
) -> Result<Path, PlanError> {
    let table = ConstraintTable::new(goal, constraints);
    plan(grid, start, goal, &table, horizon, 0).map(|r| r.path)
}

pub(crate) fn plan(
    grid: &GridMap,
    start: Cell,
    goal: Cell,
    table: &ConstraintTable,
    horizon: usize,
    agent: usize,
) -> Result<LowLevel, PlanError> {
    check_endpoints(grid, start, goal)?;
    let unsolvable = PlanError::Unsolvable { agent, horizon };
    if grid.bfs_distances(start)[grid.index(goal)].is_none() {
        return Err(unsolvable);
    }
    let finish = table.earliest_finish();
    let mut nodes = vec![Node {
        cell: start,
        t: 0,
        parent: None,
        conflicts: 0,
    }];
    // (f, h, generation order) min-heap
    let mut open = BinaryHeap::new();
    let h0 = heuristic(start, 0, goal, finish);
    open.push(Reverse((h0, h0, 0usize)));
    let mut closed = HashSet::new();
    let mut expansions = 0;
    while let Some(Reverse((_, _, i))) = open.pop() {
        let Node { cell, t, .. } = nodes[i];
        if !closed.insert((cell, t.min(table.settled))) {
            continue;
        }
        expansions += 1;
        if cell == goal && t >= finish {
            return Ok(LowLevel {
                path: reconstruct(&nodes, i),
                lower_bound: t,
                expansions,
            });
        }
        if t >= horizon {
            continue;
        }
        for next in successors(grid, cell) {
            if !table.allows(cell, next, t) || closed.contains(&(next, (t + 1).min(table.settled))) {
                continue;
            }
            let h = heuristic(next, t + 1, goal, finish);
            nodes.push(Node {
                cell: next,
                t: t + 1,
                parent: Some(i),
                conflicts: 0,
            });
            open.push(Reverse((t + 1 + h, h, nodes.len() - 1)));
        }
    }
    Err(unsolvable)
}

/// Conflicts created by stepping `from → to` between `t` and `t + 1`, against other agents' paths.
fn step_conflicts(others: &[&Path], from: Cell, to: Cell, t: usize) -> usize {
    others
        .iter()
        .filter(|p| p.at(t + 1) == to || (p.at(t) == to && p.at(t + 1) == from && from != to))
        .count()
}

/// Focal search: any path with cost ≤ `w` × lower bound, preferring fewer
/// conflicts with `others`. Returns the path and the lower bound.
pub(crate) fn plan_focal(
    grid: &GridMap,
    start: Cell,
    goal: Cell,
    table: &ConstraintTable,
    horizon: usize,
    agent: usize,
    w: f64,
    others: &[&Path],
) -> Result<LowLevel, PlanError> {
    check_endpoints(grid, start, goal)?;
    let unsolvable = PlanError::Unsolvable { agent, horizon };
    if grid.bfs_distances(start)[grid.index(goal)].is_none() {
        return Err(unsolvable);
    }
    let finish = table.earliest_finish();
    let start_conflicts = others.iter().filter(|p| p.at(0) == start).count();
    let mut nodes = vec![Node {
        cell: start,
        t: 0,
        parent: None,
        conflicts: start_conflicts,
    }];
    let mut f_of = vec![heuristic(start, 0, goal, finish)];
    let mut h_of = vec![f_of[0]];
    // open: (f, h, id); focal: (conflicts, f, h, id)
    let mut open: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    let mut focal: BTreeSet<(usize, usize, usize, usize)> = BTreeSet::new();
    let mut seen: HashMap<(Cell, usize), usize> = HashMap::new();
    open.insert((f_of[0], h_of[0], 0));
    focal.insert((nodes[0].conflicts, f_of[0], h_of[0], 0));
    seen.insert((start, 0), 0);
    let bound = |f_min: usize| (w * f_min as f64).floor() as usize;
    let mut f_min = f_of[0];
    let mut expansions = 0;

    while let Some(&(open_min, _, _)) = open.first() {
        if open_min > f_min {
            // Widen FOCAL to the new bound.
            let (old, new) = (bound(f_min), bound(open_min));
            for &(f, h, id) in open.range((old + 1, 0, 0)..) {
                if f > new {
                    break;
                }
                focal.insert((nodes[id].conflicts, f, h, id));
            }
            f_min = open_min;
        }
        let (_, f, h, i) = focal.pop_first().expect("focal holds the open minimum");
        open.remove(&(f, h, i));
        expansions += 1;
        let Node { cell, t, conflicts, .. } = nodes[i];
        if cell == goal && t >= finish {
            return Ok(LowLevel {
                path: reconstruct(&nodes, i),
                lower_bound: f_min.min(t),
                expansions,
            });
        }
        if t >= horizon {
            continue;
        }
        for next in successors(grid, cell) {
            if !table.allows(cell, next, t) || seen.contains_key(&(next, t + 1)) {
                continue;
            }
            let h = heuristic(next, t + 1, goal, finish);
            let f = t + 1 + h;
            let id = nodes.len();
            nodes.push(Node {
                cell: next,
                t: t + 1,
                parent: Some(i),
                conflicts: conflicts + step_conflicts(others, cell, next, t),
            });
            f_of.push(f);
            h_of.push(h);
            seen.insert((next, t + 1), id);
            open.insert((f, h, id));
            if f <= bound(f_min) {
                focal.insert((nodes[id].conflicts, f, h, id));
            }
        }
    }
    Err(unsolvable)
}
