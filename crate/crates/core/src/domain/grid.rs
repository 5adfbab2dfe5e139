use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A grid cell. `y` grows downwards, so row 0 is the first line of the map text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Cell { x, y }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn is_adjacent_or_same(self, other: Cell) -> bool {
        self.manhattan(other) <= 1
    }
}

impl From<[usize; 2]> for Cell {
    fn from([x, y]: [usize; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [usize; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridParseError {
    #[error("map text is empty")]
    Empty,
    #[error("ragged rows: row {row} has width {found}, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("illegal character {ch:?} at row {row}, column {col}")]
    IllegalChar { ch: char, row: usize, col: usize },
    #[error("malformed map header: {0}")]
    Header(String),
}

/// 4-connected occupancy grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
}

impl GridMap {
    /// An obstacle-free map.
    pub fn empty(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        GridMap {
            width,
            height,
            blocked: vec![false; width * height],
        }
    }

    /// Builds a map from explicit obstacles. Out-of-bounds obstacles are rejected.
    pub fn with_blocked(
        width: usize,
        height: usize,
        blocked: impl IntoIterator<Item = Cell>,
    ) -> Option<Self> {
        let mut map = GridMap::empty(width, height);
        for c in blocked {
            if !map.in_bounds(c) {
                return None;
            }
            let i = map.index(c);
            map.blocked[i] = true;
        }
        Some(map)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn index(&self, c: Cell) -> usize {
        c.y * self.width + c.x
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.blocked[self.index(c)]
    }

    /// In bounds and not an obstacle.
    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.is_blocked(c)
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        let i = self.index(c);
        self.blocked[i] = blocked;
    }

    /// Obstacles in row-major order.
    pub fn blocked_cells(&self) -> Vec<Cell> {
        (0..self.num_cells())
            .filter(|&i| self.blocked[i])
            .map(|i| self.cell_at(i))
            .collect()
    }

    pub fn free_cells(&self) -> Vec<Cell> {
        (0..self.num_cells())
            .filter(|&i| !self.blocked[i])
            .map(|i| self.cell_at(i))
            .collect()
    }

    /// Free neighbours in the fixed order N, E, S, W.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let candidates = [
            (c.y > 0).then(|| Cell::new(c.x, c.y - 1)),
            (c.x + 1 < self.width).then(|| Cell::new(c.x + 1, c.y)),
            (c.y + 1 < self.height).then(|| Cell::new(c.x, c.y + 1)),
            (c.x > 0).then(|| Cell::new(c.x - 1, c.y)),
        ];
        candidates
            .into_iter()
            .flatten()
            .filter(move |&n| !self.is_blocked(n))
    }

    /// Renders the map in the inline text format accepted by [`parse_grid_map`].
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            if y > 0 {
                out.push('\n');
            }
            for x in 0..self.width {
                out.push(if self.is_blocked(Cell::new(x, y)) { '@' } else { '.' });
            }
        }
        out
    }

    /// Breadth-first distances from `source`; `None` for unreachable cells.
    pub fn bfs_distances(&self, source: Cell) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_cells()];
        if !self.is_free(source) {
            return dist;
        }
        let mut queue = std::collections::VecDeque::new();
        dist[self.index(source)] = Some(0);
        queue.push_back(source);
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c)].unwrap_or(0);
            for n in self.neighbors(c) {
                let i = self.index(n);
                if dist[i].is_none() {
                    dist[i] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }
}

fn parse_rows<'a>(
    rows: impl Iterator<Item = &'a str>,
    row_offset: usize,
    legal: impl Fn(char) -> Option<bool>,
) -> Result<GridMap, GridParseError> {
    let mut width = None;
    let mut blocked = Vec::new();
    let mut height = 0;
    for (row, line) in rows.enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let mut cols = 0;
        for (col, ch) in line.chars().enumerate() {
            match legal(ch) {
                Some(true) => blocked.push(Cell::new(col, row)),
                Some(false) => {}
                None => {
                    return Err(GridParseError::IllegalChar {
                        ch,
                        row: row + row_offset,
                        col,
                    })
                }
            }
            cols += 1;
        }
        match width {
            None => width = Some(cols),
            Some(w) if w != cols => {
                return Err(GridParseError::Ragged {
                    row: row + row_offset,
                    expected: w,
                    found: cols,
                })
            }
            Some(_) => {}
        }
        height += 1;
    }
    match width {
        Some(w) if w > 0 => Ok(GridMap::with_blocked(w, height, blocked).expect("cells in bounds")),
        _ => Err(GridParseError::Empty),
    }
}

/// Parses inline map text: `.` is free, `@` is blocked, rows separated by newlines.
/// A single trailing newline is tolerated.
pub fn parse_grid_map(text: &str) -> Result<GridMap, GridParseError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Err(GridParseError::Empty);
    }
    parse_rows(body.split('\n'), 0, |ch| match ch {
        '.' => Some(false),
        '@' => Some(true),
        _ => None,
    })
}

/// Parses a movingai benchmark `.map` file. The `type`/`height`/`width`/`map`
/// header is checked against the body; `.` is free, `@` and `T` are blocked.
pub fn parse_movingai_map(text: &str) -> Result<GridMap, GridParseError> {
    let mut lines = text.lines();
    let mut width = None;
    let mut height = None;
    let mut consumed = 0;
    for line in lines.by_ref() {
        consumed += 1;
        let line = line.trim();
        if line == "map" {
            break;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next()) {
            (Some("type"), Some(_)) => {}
            (Some("height"), Some(v)) => {
                height = Some(v.parse::<usize>().map_err(|e| GridParseError::Header(e.to_string()))?)
            }
            (Some("width"), Some(v)) => {
                width = Some(v.parse::<usize>().map_err(|e| GridParseError::Header(e.to_string()))?)
            }
            (None, _) => {}
            _ => return Err(GridParseError::Header(format!("unexpected line {line:?}"))),
        }
    }
    let body: Vec<&str> = lines.filter(|l| !l.trim().is_empty()).collect();
    let map = parse_rows(body.into_iter(), consumed, |ch| match ch {
        '.' => Some(false),
        '@' | 'T' => Some(true),
        _ => None,
    })?;
    if width.is_some_and(|w| w != map.width()) || height.is_some_and(|h| h != map.height()) {
        return Err(GridParseError::Header(format!(
            "header says {}x{}, body is {}x{}",
            width.unwrap_or(map.width()),
            height.unwrap_or(map.height()),
            map.width(),
            map.height()
        )));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_free_cell() {
        let m = parse_grid_map(".").unwrap();
        assert_eq!((m.width(), m.height()), (1, 1));
        assert!(m.blocked_cells().is_empty());
    }

    #[test]
    fn two_by_two_with_obstacle() {
        let m = parse_grid_map("..\n.@").unwrap();
        assert_eq!((m.width(), m.height()), (2, 2));
        assert_eq!(m.blocked_cells(), vec![Cell::new(1, 1)]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(
            parse_grid_map("..\n..."),
            Err(GridParseError::Ragged { row: 1, expected: 2, found: 3 })
        ));
    }

    #[test]
    fn empty_and_illegal() {
        assert_eq!(parse_grid_map(""), Err(GridParseError::Empty));
        assert_eq!(parse_grid_map("\n"), Err(GridParseError::Empty));
        assert!(matches!(
            parse_grid_map(".x"),
            Err(GridParseError::IllegalChar { ch: 'x', row: 0, col: 1 })
        ));
    }

    #[test]
    fn text_round_trip() {
        let text = "..@.\n@...\n....";
        assert_eq!(parse_grid_map(text).unwrap().to_text(), text);
        assert_eq!(parse_grid_map("..\n.@\n").unwrap().to_text(), "..\n.@");
    }

    #[test]
    fn movingai_header() {
        let text = "type octile\nheight 2\nwidth 3\nmap\n..T\n@..\n";
        let m = parse_movingai_map(text).unwrap();
        assert_eq!((m.width(), m.height()), (3, 2));
        assert_eq!(m.blocked_cells(), vec![Cell::new(2, 0), Cell::new(0, 1)]);

        let bad = "type octile\nheight 3\nwidth 3\nmap\n..T\n@..\n";
        assert!(matches!(parse_movingai_map(bad), Err(GridParseError::Header(_))));
    }

    #[test]
    fn neighbor_order_is_nesw() {
        let m = GridMap::empty(3, 3);
        let n: Vec<_> = m.neighbors(Cell::new(1, 1)).collect();
        assert_eq!(
            n,
            vec![Cell::new(1, 0), Cell::new(2, 1), Cell::new(1, 2), Cell::new(0, 1)]
        );
    }
}
