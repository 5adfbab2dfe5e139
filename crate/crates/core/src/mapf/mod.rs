//! Multi-agent path finding on 4-connected grids.
//!
//! Every action (move or wait) costs one timestep. An agent's cost is the time
//! it reaches its goal for the last time; it then stays there, and that
//! occupancy still counts for collisions.

mod astar;
mod cbs;
mod conflict;
mod oracle;

use serde::Serialize;
use thiserror::Error;

use crate::domain::Cell;

pub use astar::{astar_spacetime, ConstraintTable};
pub use cbs::{cbs_solve, replan, CbsOptions, CtNode};
pub use conflict::{count_conflicts, detect_conflict, split_conflict};
pub use oracle::{oracle_joint_bfs, OracleError, ORACLE_MAX_AGENTS, ORACLE_MAX_CELLS};

/// Timed path; `cells[t]` is the position at timestep `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Path {
    cells: Vec<Cell>,
    cost: usize,
}

impl Path {
    /// Wraps a non-empty cell sequence. Trailing repeats of the final cell are trimmed.
    pub fn new(mut cells: Vec<Cell>) -> Self {
        assert!(!cells.is_empty(), "a path has at least its start cell");
        while cells.len() > 1 && cells[cells.len() - 1] == cells[cells.len() - 2] {
            cells.pop();
        }
        let cost = cells.len() - 1;
        Path { cells, cost }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Arrival time at the goal.
    pub fn cost(&self) -> usize {
        self.cost
    }

    pub fn start(&self) -> Cell {
        self.cells[0]
    }

    pub fn goal(&self) -> Cell {
        self.cells[self.cost]
    }

    /// Position at `t`; the goal for every `t` past the end.
    pub fn at(&self, t: usize) -> Cell {
        self.cells[t.min(self.cost)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Agent may not be at `cell` at time `t`.
    Vertex { cell: Cell, t: usize },
    /// Agent may not move `from → to` between `t` and `t + 1`.
    Edge { from: Cell, to: Cell, t: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Constraint {
    pub agent: usize,
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn vertex(agent: usize, cell: Cell, t: usize) -> Self {
        Constraint {
            agent,
            kind: ConstraintKind::Vertex { cell, t },
        }
    }

    pub fn edge(agent: usize, from: Cell, to: Cell, t: usize) -> Self {
        Constraint {
            agent,
            kind: ConstraintKind::Edge { from, to, t },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    /// Both agents at `cell` at time `t`.
    Vertex { cell: Cell },
    /// Agent `a` moves `a_from → a_to` while agent `b` moves the opposite way, between `t` and `t + 1`.
    Edge { a_from: Cell, a_to: Cell },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Conflict {
    pub a: usize,
    pub b: usize,
    pub t: usize,
    pub kind: ConflictKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub ct_nodes_expanded: usize,
    pub ct_nodes_generated: usize,
    pub conflicts_resolved: usize,
    pub low_level_expansions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub paths: Vec<Path>,
    /// Sum of path costs.
    pub soc: usize,
    pub makespan: usize,
    pub stats: SearchStats,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("agent {agent} cannot reach its goal within horizon {horizon}")]
    Unsolvable { agent: usize, horizon: usize },
    #[error("invalid planning input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CbsError {
    #[error("invalid planning input: {0}")]
    InvalidInput(String),
    #[error("no conflict-free solution found ({reason}); expanded {} CT nodes", stats.ct_nodes_expanded)]
    Unsolvable { reason: String, stats: SearchStats },
}

/// Checks the path invariants against a grid: starts at `start`, ends at `goal`,
/// every step waits or moves to a free 4-neighbour.
pub fn path_is_valid(grid: &crate::domain::GridMap, path: &Path, start: Cell, goal: Cell) -> bool {
    path.start() == start
        && path.goal() == goal
        && path.cells.iter().all(|&c| grid.is_free(c))
        && path.cells.windows(2).all(|w| w[0].is_adjacent_or_same(w[1]))
}
