use std::fmt::Write;

use super::report::PlannedPath;
use crate::domain::GridMap;
use crate::voting::Assignment;

/// Stroke colours, assigned to paths in order and reused cyclically.
pub const PALETTE: [&str; 10] = [
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4", "#f032e6", "#bfef45", "#469990", "#9a6324",
];

const CELL: usize = 32;

fn centre(v: usize) -> usize {
    v * CELL + CELL / 2
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Draws the grid, obstacles, one polyline per path and a marker on each
/// assigned goal. Output is a pure function of the inputs.
pub fn render_svg(grid: &GridMap, paths: &[PlannedPath], assignment: &Assignment) -> String {
    let (w, h) = (grid.width() * CELL, grid.height() * CELL);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##);
    for c in grid.blocked_cells() {
        let _ = writeln!(
            s,
            r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="#555555"/>"##,
            c.x * CELL,
            c.y * CELL
        );
    }
    for x in 0..=grid.width() {
        let _ = writeln!(s, r##"<line x1="{0}" y1="0" x2="{0}" y2="{h}" stroke="#cccccc"/>"##, x * CELL);
    }
    for y in 0..=grid.height() {
        let _ = writeln!(s, r##"<line x1="0" y1="{0}" x2="{w}" y2="{0}" stroke="#cccccc"/>"##, y * CELL);
    }
    for (i, p) in paths.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = p.cells.iter().map(|c| format!("{},{}", centre(c.x), centre(c.y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="4" stroke-linejoin="round"><title>{} to {}</title></polyline>"#,
            points.join(" "),
            escape(&p.agent),
            escape(&p.task)
        );
        if let Some(start) = p.cells.first() {
            let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="6" fill="{colour}"/>"#, centre(start.x), centre(start.y));
        }
    }
    for (task, agent) in assignment {
        let Some(goal) = paths.iter().find(|p| &p.task == task).and_then(|p| p.cells.last()) else {
            continue;
        };
        let colour = paths
            .iter()
            .position(|p| &p.agent == agent)
            .map_or("#000000", |i| PALETTE[i % PALETTE.len()]);
        let (x, y) = (goal.x * CELL + 6, goal.y * CELL + 6);
        let _ = writeln!(
            s,
            r#"<rect x="{x}" y="{y}" width="{}" height="{}" fill="none" stroke="{colour}" stroke-width="3"><title>{}</title></rect>"#,
            CELL - 12,
            CELL - 12,
            escape(task)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{parse_grid_map, Cell};

    fn path(agent: &str, task: &str, cells: &[(usize, usize)]) -> PlannedPath {
        PlannedPath {
            agent: agent.into(),
            task: task.into(),
            cost: cells.len() - 1,
            cells: cells.iter().map(|&(x, y)| Cell::new(x, y)).collect(),
        }
    }

    #[test]
    fn one_path() {
        let g = GridMap::empty(3, 3);
        let p = [path("A", "T", &[(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)])];
        let a = Assignment::from([("T".to_string(), "A".to_string())]);
        let svg = render_svg(&g, &p, &a);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("16,16 48,16 80,16 80,48 80,80"));
        assert_eq!(svg, render_svg(&g, &p, &a));
    }

    #[test]
    fn grid_only() {
        let g = parse_grid_map(".@\n..").unwrap();
        let svg = render_svg(&g, &[], &Assignment::new());
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert_eq!(svg.matches("#555555").count(), 1);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn colours_follow_palette() {
        let g = GridMap::empty(3, 3);
        let p = [path("A", "T1", &[(0, 0), (1, 0)]), path("C", "T2", &[(0, 2), (1, 2)])];
        let svg = render_svg(&g, &p, &Assignment::new());
        assert!(svg.contains(&format!(r#"stroke="{}""#, PALETTE[0])));
        assert!(svg.contains(&format!(r#"stroke="{}""#, PALETTE[1])));
    }
}
