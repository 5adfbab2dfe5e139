use super::{Conflict, ConflictKind, Constraint, Path};

fn horizon(paths: &[Path]) -> usize {
    paths.iter().map(Path::cost).max().unwrap_or(0)
}

fn vertex_at(paths: &[Path], a: usize, b: usize, t: usize) -> Option<Conflict> {
    let cell = paths[a].at(t);
    (cell == paths[b].at(t)).then_some(Conflict {
        a,
        b,
        t,
        kind: ConflictKind::Vertex { cell },
    })
}

fn edge_at(paths: &[Path], a: usize, b: usize, t: usize) -> Option<Conflict> {
    let (a_from, a_to) = (paths[a].at(t), paths[a].at(t + 1));
    (a_from != a_to && paths[b].at(t) == a_to && paths[b].at(t + 1) == a_from).then_some(Conflict {
        a,
        b,
        t,
        kind: ConflictKind::Edge { a_from, a_to },
    })
}

/// Earliest conflict among `paths` (shorter paths wait at their goals).
/// At equal time vertex conflicts come first, then the lowest agent pair.
pub fn detect_conflict(paths: &[Path]) -> Option<Conflict> {
    let k = paths.len();
    for t in 0..=horizon(paths) {
        for a in 0..k {
            for b in a + 1..k {
                if let Some(c) = vertex_at(paths, a, b, t) {
                    return Some(c);
                }
            }
        }
        for a in 0..k {
            for b in a + 1..k {
                if let Some(c) = edge_at(paths, a, b, t) {
                    return Some(c);
                }
            }
        }
    }
    None
}

/// Number of pairwise vertex and edge conflicts over all timesteps.
pub fn count_conflicts(paths: &[Path]) -> usize {
    let k = paths.len();
    let mut n = 0;
    for t in 0..=horizon(paths) {
        for a in 0..k {
            for b in a + 1..k {
                n += usize::from(vertex_at(paths, a, b, t).is_some());
                n += usize::from(edge_at(paths, a, b, t).is_some());
            }
        }
    }
    n
}

/// The two constraints that resolve `conflict`: one per involved agent.
pub fn split_conflict(conflict: &Conflict) -> [Constraint; 2] {
    let Conflict { a, b, t, kind } = *conflict;
    match kind {
        ConflictKind::Vertex { cell } => [Constraint::vertex(a, cell, t), Constraint::vertex(b, cell, t)],
        ConflictKind::Edge { a_from, a_to } => [Constraint::edge(a, a_from, a_to, t), Constraint::edge(b, a_to, a_from, t)],
    }
}
