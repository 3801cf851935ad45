//! Maze-like wall layouts and connectivity checks.

use std::collections::VecDeque;

use rand::Rng as _;

use crate::seeding::Rng;

use super::objects::ObjectKind;

pub const MAX_WALL_FRACTION: f64 = 0.25;
pub const LAYOUT_RETRIES: usize = 100;

/// Cells reachable from `start` through non-wall cells (4-connectivity).
pub fn flood_fill(cells: &[ObjectKind], width: usize, height: usize, start: usize) -> Vec<bool> {
    let mut seen = vec![false; cells.len()];
    if cells[start] == ObjectKind::Wall {
        return seen;
    }
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % width, i / width);
        let mut visit = |j: usize| {
            if !seen[j] && cells[j] != ObjectKind::Wall {
                seen[j] = true;
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < width {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - width);
        }
        if y + 1 < height {
            visit(i + width);
        }
    }
    seen
}

/// True when every non-wall cell is reachable from every other.
pub fn is_connected(cells: &[ObjectKind], width: usize, height: usize) -> bool {
    let Some(start) = cells.iter().position(|c| *c != ObjectKind::Wall) else {
        return false;
    };
    let seen = flood_fill(cells, width, height, start);
    cells.iter().zip(&seen).all(|(c, s)| *c == ObjectKind::Wall || *s)
}

/// Random horizontal/vertical wall segments covering at most a quarter of
/// the grid. Returns `None` when no connected layout is found in
/// [`LAYOUT_RETRIES`] attempts.
pub fn random_wall_layout(rng: &mut Rng, width: usize, height: usize) -> Option<Vec<ObjectKind>> {
    let budget = ((width * height) as f64 * MAX_WALL_FRACTION).floor() as usize;
    for _ in 0..LAYOUT_RETRIES {
        let mut cells = vec![ObjectKind::Empty; width * height];
        let mut placed = 0;
        let segments = rng.gen_range(2..=4);
        for _ in 0..segments {
            let len = rng.gen_range(2..=width.min(height).saturating_sub(2).max(2));
            let horizontal = rng.gen_bool(0.5);
            let (x0, y0) = (rng.gen_range(0..width), rng.gen_range(0..height));
            for t in 0..len {
                let (x, y) = if horizontal { (x0 + t, y0) } else { (x0, y0 + t) };
                if x >= width || y >= height || placed >= budget {
                    break;
                }
                let i = y * width + x;
                if cells[i] != ObjectKind::Wall {
                    cells[i] = ObjectKind::Wall;
                    placed += 1;
                }
            }
        }
        if placed > 0 && is_connected(&cells, width, height) {
            return Some(cells);
        }
    }
    None
}
