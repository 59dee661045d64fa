//! A* over the robot's own map.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::gridmap::{Cell, CellState, GridMap, NEIGHBOURS_8};

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn octile(a: Cell, b: Cell) -> f64 {
    let dx = (a.x - b.x).abs() as f64;
    let dy = (a.y - b.y).abs() as f64;
    dx.max(dy) + (SQRT2 - 1.0) * dx.min(dy)
}

/// Shortest 8-connected path from `start` to `goal`, both included.
///
/// Only free cells are traversable. The goal itself may also be unknown,
/// since frontier cells are unknown by definition. Diagonal steps must not
/// cut a corner: both orthogonal cells they pass have to be free (towards
/// the goal they only have to be free or unknown). Ties are broken on the
/// cell index, so the result is deterministic.
pub fn plan_path(map: &GridMap, start: Cell, goal: Cell) -> Option<Vec<Cell>> {
    if !map.contains(start) || !map.contains(goal) {
        return None;
    }
    if !matches!(map.state(goal), CellState::Free | CellState::Unknown) {
        return None;
    }
    if start == goal {
        return Some(vec![start]);
    }
    let geom = map.geometry();
    let n = geom.len();
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    let s = geom.index(start);
    let t = geom.index(goal);
    g[s] = 0.0;
    // f is non-negative, so its bit pattern orders like the value
    heap.push(Reverse((octile(start, goal).to_bits(), s)));
    let passable = |c: Cell| map.state(c) == CellState::Free;
    let corner_ok = |c: Cell, to_goal: bool| match map.get(c) {
        Some(CellState::Free) => true,
        Some(CellState::Unknown) => to_goal,
        _ => false,
    };
    while let Some(Reverse((_, i))) = heap.pop() {
        if closed[i] {
            continue;
        }
        if i == t {
            let mut path = vec![goal];
            let mut k = i;
            while k != s {
                k = parent[k];
                path.push(geom.cell_of(k));
            }
            path.reverse();
            return Some(path);
        }
        closed[i] = true;
        let c = geom.cell_of(i);
        for (dx, dy) in NEIGHBOURS_8 {
            let nb = c.offset(dx, dy);
            if !map.contains(nb) {
                continue;
            }
            let j = geom.index(nb);
            if closed[j] {
                continue;
            }
            let to_goal = j == t;
            if !to_goal && !passable(nb) {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal
                && !(corner_ok(c.offset(dx, 0), to_goal) && corner_ok(c.offset(0, dy), to_goal))
            {
                continue;
            }
            let cand = g[i] + if diagonal { SQRT2 } else { 1.0 };
            if cand < g[j] {
                g[j] = cand;
                parent[j] = i;
                heap.push(Reverse(((cand + octile(nb, goal)).to_bits(), j)));
            }
        }
    }
    None
}
