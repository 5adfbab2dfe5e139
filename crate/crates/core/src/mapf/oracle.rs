//! Exhaustive joint-state search: the reference optimum for tiny instances.
//!
//! States are (positions, finished-set). Each step every unfinished agent pays
//! one unit; an agent standing on its goal may switch to finished for free and
//! then never moves again. The goal state has every agent finished.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::domain::{Cell, GridMap};

pub const ORACLE_MAX_AGENTS: usize = 3;
pub const ORACLE_MAX_CELLS: usize = 36;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance too large for the joint search: {0}")]
    TooLarge(String),
    #[error("invalid instance: {0}")]
    InvalidInput(String),
    #[error("no collision-free joint plan exists")]
    Unsolvable,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct State {
    pos: [u8; ORACLE_MAX_AGENTS],
    finished: u8,
}

/// Optimal sum of costs for up to three agents on grids of at most 36 cells.
pub fn oracle_joint_bfs(grid: &GridMap, starts: &[Cell], goals: &[Cell]) -> Result<usize, OracleError> {
    let k = starts.len();
    if k > ORACLE_MAX_AGENTS || grid.num_cells() > ORACLE_MAX_CELLS {
        return Err(OracleError::TooLarge(format!("{k} agents on {} cells", grid.num_cells())));
    }
    if goals.len() != k {
        return Err(OracleError::InvalidInput("starts and goals differ in length".into()));
    }
    for &c in starts.iter().chain(goals) {
        if !grid.is_free(c) {
            return Err(OracleError::InvalidInput(format!("{c} is not a free cell")));
        }
    }
    let goal_idx: Vec<usize> = goals.iter().map(|&g| grid.index(g)).collect();
    // Exact single-agent distances to each goal: an admissible, consistent heuristic.
    let dist: Vec<Vec<Option<usize>>> = goals.iter().map(|&g| grid.bfs_distances(g)).collect();
    for i in 0..k {
        if dist[i][grid.index(starts[i])].is_none() {
            return Err(OracleError::Unsolvable);
        }
    }
    let neighbours: Vec<Vec<u8>> = (0..grid.num_cells())
        .map(|i| {
            let c = grid.cell_at(i);
            std::iter::once(c).chain(grid.neighbors(c)).map(|n| grid.index(n) as u8).collect()
        })
        .collect();
    let all_done = (1u8 << k) - 1;
    let h = |s: &State| -> usize {
        (0..k)
            .filter(|&i| s.finished & (1 << i) == 0)
            .map(|i| dist[i][s.pos[i] as usize].unwrap_or(usize::MAX / 8))
            .sum()
    };

    let mut start = State {
        pos: [0; ORACLE_MAX_AGENTS],
        finished: 0,
    };
    for (i, &c) in starts.iter().enumerate() {
        start.pos[i] = grid.index(c) as u8;
    }
    let mut best: HashMap<State, usize> = HashMap::new();
    let mut open = BinaryHeap::new();
    best.insert(start, 0);
    open.push(Reverse((h(&start), 0usize, start)));

    // Per-agent options: (new position, finished after the step, pays for the step).
    let mut options: Vec<Vec<(u8, bool, bool)>> = vec![Vec::new(); k];
    while let Some(Reverse((_, g, s))) = open.pop() {
        if best.get(&s).is_some_and(|&b| b < g) {
            continue;
        }
        if s.finished == all_done {
            return Ok(g);
        }
        for i in 0..k {
            options[i].clear();
            let p = s.pos[i];
            if s.finished & (1 << i) != 0 {
                options[i].push((p, true, false));
                continue;
            }
            if p as usize == goal_idx[i] {
                options[i].push((p, true, false));
            }
            for &n in &neighbours[p as usize] {
                options[i].push((n, false, true));
            }
        }
        let mut choice = [0usize; ORACLE_MAX_AGENTS];
        'combos: loop {
            let mut next = State {
                pos: [0; ORACLE_MAX_AGENTS],
                finished: 0,
            };
            let mut cost = 0;
            for i in 0..k {
                let (p, done, pays) = options[i][choice[i]];
                next.pos[i] = p;
                if done {
                    next.finished |= 1 << i;
                }
                cost += usize::from(pays);
            }
            let valid = (0..k).all(|a| {
                (a + 1..k).all(|b| {
                    next.pos[a] != next.pos[b] && !(next.pos[a] == s.pos[b] && next.pos[b] == s.pos[a] && s.pos[a] != s.pos[b])
                })
            });
            if valid && next != s {
                let ng = g + cost;
                if best.get(&next).is_none_or(|&b| ng < b) {
                    best.insert(next, ng);
                    open.push(Reverse((ng + h(&next), ng, next)));
                }
            }
            // Odometer over the option lists.
            let mut i = 0;
            loop {
                if i == k {
                    break 'combos;
                }
                choice[i] += 1;
                if choice[i] < options[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }
    Err(OracleError::Unsolvable)
}
