//! Frontier cells, frontier components and their classification.
//!
//! A frontier cell is an unknown cell bordering known traversable space. It is
//! *simple* when it touches free space and no obstacle of either kind, and
//! *dynamic* when it touches a dynamic obstacle and no static one. Connected
//! frontier cells (8-connectivity) form a frontier whose type follows from the
//! ratio of simple to dynamic cells.
//!
//! The search walks free space breadth-first (4-connectivity) from the robot
//! and stops after the layer in which the first simple frontier is emitted.
//! Dynamic obstacle cells are never walked through, but a dynamic blob that
//! touches the walked region is scanned for frontier cells along its border,
//! since that is where dynamic frontiers live.

use std::cell::OnceCell;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{Cell, CellState, GridMap, Point, NEIGHBOURS_4, NEIGHBOURS_8};

#[derive(Debug, Error, PartialEq)]
pub enum FrontierError {
    #[error("cell {0} lies outside the map")]
    OutOfBounds(Cell),
    #[error("a frontier needs at least one cell")]
    Empty,
    #[error("threshold must be greater than 1 (got {0})")]
    BadThreshold(f64),
    #[error("the map has no free cell to stand on")]
    NoFreeCell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrontierCellKind {
    NotFrontier,
    Simple,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrontierType {
    Simple,
    MixedSimple,
    Mixed,
    Dynamic,
}

impl FrontierType {
    /// Whether the aging and out-of-range terms of the cost apply.
    pub fn ages(self) -> bool {
        matches!(self, FrontierType::Mixed | FrontierType::Dynamic)
    }
}

/// Identifier of a frontier. Fresh frontiers take the row-major index of
/// their first cell; remembered frontiers keep the id they were stored with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrontierId(pub u64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub id: FrontierId,
    /// Member cells in row-major order.
    pub cells: Vec<Cell>,
    pub size_simple: usize,
    pub size_dynamic: usize,
    pub kind: FrontierType,
    pub travel_point: Cell,
    /// World position of the travel point's center.
    pub target: Point,
    /// Simulation time of first detection, seconds.
    pub first_seen: f64,
    /// BFS layer at which the search reached the frontier.
    pub distance: usize,
}

impl Frontier {
    pub fn size(&self) -> usize {
        self.cells.len()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells
            .binary_search_by_key(&key(cell), |c| key(*c))
            .is_ok()
    }

    /// True when the two frontiers share at least one cell.
    pub fn overlaps(&self, other: &Frontier) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            match key(self.cells[i]).cmp(&key(other.cells[j])) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

fn key(c: Cell) -> (i64, i64) {
    (c.y, c.x)
}

/// Frontier search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Smallest frontier (in cells) that is reported.
    pub min_size: usize,
    pub thresh: f64,
    /// Walk all reachable free space instead of stopping at the closest
    /// simple frontier.
    pub exhaustive: bool,
}

impl SearchParams {
    pub fn new(min_size: usize, thresh: f64) -> Self {
        Self {
            min_size,
            thresh,
            exhaustive: false,
        }
    }
}

#[inline]
pub(crate) fn kind_of(map: &GridMap, cell: Cell) -> FrontierCellKind {
    if map.state(cell) != CellState::Unknown {
        return FrontierCellKind::NotFrontier;
    }
    let (mut free, mut dynamic) = (false, false);
    for (dx, dy) in NEIGHBOURS_8 {
        let n = cell.offset(dx, dy);
        match map.get(n) {
            Some(CellState::StaticObstacle) => return FrontierCellKind::NotFrontier,
            Some(CellState::DynamicObstacle) => dynamic = true,
            Some(CellState::Free) => free = true,
            _ => {}
        }
    }
    if dynamic {
        FrontierCellKind::Dynamic
    } else if free {
        FrontierCellKind::Simple
    } else {
        FrontierCellKind::NotFrontier
    }
}

/// Frontier kind of a single cell.
pub fn classify_cell(map: &GridMap, cell: Cell) -> Result<FrontierCellKind, FrontierError> {
    if !map.contains(cell) {
        return Err(FrontierError::OutOfBounds(cell));
    }
    Ok(kind_of(map, cell))
}

/// Frontier type from its simple and dynamic cell counts.
///
/// Cases are tested in order, so a ratio of exactly `1 / thresh` is `Mixed`.
/// Ratios are compared by cross-multiplication to avoid rounding at the
/// boundaries.
pub fn classify_frontier(
    size_simple: usize,
    size_dynamic: usize,
    thresh: f64,
) -> Result<FrontierType, FrontierError> {
    if !(thresh > 1.0) {
        return Err(FrontierError::BadThreshold(thresh));
    }
    if size_simple + size_dynamic == 0 {
        return Err(FrontierError::Empty);
    }
    let s = size_simple as f64;
    let d = size_dynamic as f64;
    Ok(if size_dynamic == 0 {
        FrontierType::Simple
    } else if s >= thresh * d {
        FrontierType::MixedSimple
    } else if s * thresh >= d {
        FrontierType::Mixed
    } else {
        FrontierType::Dynamic
    })
}

/// Free space reachable from the robot (4-connected), with the robot's own
/// cell always included.
#[derive(Debug, Clone)]
pub struct Reachability {
    reached: Vec<bool>,
    cells: Vec<usize>,
}

impl Reachability {
    pub fn compute(map: &GridMap, robot: Cell) -> Self {
        let geom = map.geometry();
        let mut reached = vec![false; geom.len()];
        let mut cells = Vec::new();
        if !map.contains(robot) {
            return Self { reached, cells };
        }
        let start = geom.index(robot);
        reached[start] = true;
        cells.push(start);
        let mut head = 0;
        while head < cells.len() {
            let c = geom.cell_of(cells[head]);
            head += 1;
            for (dx, dy) in NEIGHBOURS_4 {
                let n = c.offset(dx, dy);
                if map.state(n) == CellState::Free {
                    let j = geom.index(n);
                    if !reached[j] {
                        reached[j] = true;
                        cells.push(j);
                    }
                }
            }
        }
        Self { reached, cells }
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.reached.get(index).copied().unwrap_or(false)
    }

    /// True when the cell is reached or is 8-adjacent to a reached cell, i.e.
    /// a planner can end a path on it.
    pub fn can_approach(&self, map: &GridMap, cell: Cell) -> bool {
        let geom = map.geometry();
        if map.contains(cell) && self.reached[geom.index(cell)] {
            return true;
        }
        NEIGHBOURS_8.iter().any(|&(dx, dy)| {
            let n = cell.offset(dx, dy);
            map.contains(n) && self.reached[geom.index(n)] && map.state(n) == CellState::Free
        })
    }

    /// Number of reached cells.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Reachability computed on first use; most searches never need it.
pub(crate) struct LazyReach<'a> {
    map: &'a GridMap,
    robot: Cell,
    cell: OnceCell<Reachability>,
}

impl<'a> LazyReach<'a> {
    pub(crate) fn new(map: &'a GridMap, robot: Cell) -> Self {
        Self {
            map,
            robot,
            cell: OnceCell::new(),
        }
    }

    pub(crate) fn get(&self) -> &Reachability {
        self.cell
            .get_or_init(|| Reachability::compute(self.map, self.robot))
    }
}

/// Flood fill over frontier cells (8-connected) from `seed`, marking `seen`.
pub(crate) fn flood_component(map: &GridMap, seed: Cell, seen: &mut [bool]) -> Vec<Cell> {
    let geom = map.geometry();
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    seen[geom.index(seed)] = true;
    queue.push_back(seed);
    while let Some(c) = queue.pop_front() {
        out.push(c);
        for (dx, dy) in NEIGHBOURS_8 {
            let n = c.offset(dx, dy);
            if map.contains(n) {
                let j = geom.index(n);
                if !seen[j] && kind_of(map, n) != FrontierCellKind::NotFrontier {
                    seen[j] = true;
                    queue.push_back(n);
                }
            }
        }
    }
    out.sort_by_key(|c| key(*c));
    out
}

/// Whether a free 8-neighbour of `cell` lies in the robot's free space.
fn touches_reached(map: &GridMap, cell: Cell, reach: &LazyReach) -> bool {
    let geom = map.geometry();
    NEIGHBOURS_8.iter().any(|&(dx, dy)| {
        let n = cell.offset(dx, dy);
        map.state(n) == CellState::Free && reach.get().contains_index(geom.index(n))
    })
}

/// Travel point of a frontier given its cells.
///
/// When the member closest to the centroid is a simple frontier cell next to
/// the robot's free space, that member is the travel point. Otherwise (a
/// dynamic region, or a simple one only glimpsed past an obstacle) it is the
/// reachable free cell minimising distance to the robot plus distance to the
/// nearest frontier cell; ties go to the cell nearer the frontier, then to
/// the lower index.
pub(crate) fn travel_point_with(
    cells: &[Cell],
    map: &GridMap,
    robot: Cell,
    reach: &LazyReach,
) -> Result<Cell, FrontierError> {
    if cells.is_empty() {
        return Err(FrontierError::Empty);
    }
    let n = cells.len() as f64;
    let cx = cells.iter().map(|c| c.x as f64).sum::<f64>() / n;
    let cy = cells.iter().map(|c| c.y as f64).sum::<f64>() / n;
    let snapped = *cells
        .iter()
        .min_by(|a, b| {
            let da = (a.x as f64 - cx).powi(2) + (a.y as f64 - cy).powi(2);
            let db = (b.x as f64 - cx).powi(2) + (b.y as f64 - cy).powi(2);
            da.total_cmp(&db)
        })
        .expect("non-empty");
    if kind_of(map, snapped) == FrontierCellKind::Simple && touches_reached(map, snapped, reach) {
        return Ok(snapped);
    }

    let reach = reach.get();
    let geom = map.geometry();
    let margin = ((2.0 / geom.resolution).ceil() as i64).max(4);
    let (mut lo, mut hi) = (cells[0], cells[0]);
    for c in cells {
        lo = Cell::new(lo.x.min(c.x), lo.y.min(c.y));
        hi = Cell::new(hi.x.max(c.x), hi.y.max(c.y));
    }
    let in_box = |c: Cell| {
        c.x >= lo.x - margin && c.x <= hi.x + margin && c.y >= lo.y - margin && c.y <= hi.y + margin
    };

    let free = |i: usize| map.state_at(i) == CellState::Free;
    // Every cell on the straight line from robot to frontier has nearly the
    // same sum, so sums within one cell of the minimum count as equal and
    // the one nearest the frontier wins. That keeps the standoff next to the
    // obstacle instead of wherever rounding happens to put it.
    let pick = |candidates: &mut dyn Iterator<Item = usize>| -> Option<usize> {
        let scored: Vec<(f64, f64, usize)> = candidates
            .map(|i| {
                let c = geom.cell_of(i);
                let f = cells
                    .iter()
                    .map(|m| m.distance(&c))
                    .fold(f64::INFINITY, f64::min);
                (robot.distance(&c) + f, f, i)
            })
            .collect();
        let floor = scored.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        scored
            .into_iter()
            .filter(|s| s.0 <= floor + 1.0)
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)))
            .map(|s| s.2)
    };
    let best = pick(
        &mut reach
            .cells
            .iter()
            .copied()
            .filter(|&i| free(i) && in_box(geom.cell_of(i))),
    )
    .or_else(|| pick(&mut reach.cells.iter().copied().filter(|&i| free(i))))
    .or_else(|| pick(&mut (0..geom.len()).filter(|&i| free(i))));
    best.map(|i| geom.cell_of(i))
        .ok_or(FrontierError::NoFreeCell)
}

/// Travel point of a frontier for a robot standing on `robot`.
pub fn travel_point(
    frontier: &Frontier,
    map: &GridMap,
    robot: Cell,
) -> Result<Cell, FrontierError> {
    travel_point_with(&frontier.cells, map, robot, &LazyReach::new(map, robot))
}

/// Builds a frontier record from member cells, classifying them on `map`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    cells: Vec<Cell>,
    map: &GridMap,
    robot: Cell,
    reach: &LazyReach,
    thresh: f64,
    first_seen: f64,
    distance: usize,
    id: Option<FrontierId>,
) -> Result<Frontier, FrontierError> {
    let size_dynamic = cells
        .iter()
        .filter(|&&c| kind_of(map, c) == FrontierCellKind::Dynamic)
        .count();
    let size_simple = cells.len() - size_dynamic;
    let kind = classify_frontier(size_simple, size_dynamic, thresh)?;
    let travel_point = travel_point_with(&cells, map, robot, reach)?;
    let id = id.unwrap_or_else(|| FrontierId(map.geometry().index(cells[0]) as u64));
    Ok(Frontier {
        id,
        target: map.center(travel_point),
        cells,
        size_simple,
        size_dynamic,
        kind,
        travel_point,
        first_seen,
        distance,
    })
}

/// Breadth-first frontier search from the robot's cell.
pub fn frontier_search(
    map: &GridMap,
    robot: Cell,
    params: &SearchParams,
    now: f64,
) -> Result<Vec<Frontier>, FrontierError> {
    if !map.contains(robot) {
        return Err(FrontierError::OutOfBounds(robot));
    }
    frontier_search_with(map, robot, params, now, &LazyReach::new(map, robot))
}

pub(crate) fn frontier_search_with(
    map: &GridMap,
    robot: Cell,
    params: &SearchParams,
    now: f64,
    reach: &LazyReach,
) -> Result<Vec<Frontier>, FrontierError> {
    if !map.contains(robot) {
        return Err(FrontierError::OutOfBounds(robot));
    }
    if !(params.thresh > 1.0) {
        return Err(FrontierError::BadThreshold(params.thresh));
    }
    let geom = map.geometry();
    let n = geom.len();
    let mut visited = vec![false; n];
    let mut seen_frontier = vec![false; n];
    let mut seen_dynamic = vec![false; n];
    let mut found: Vec<(Vec<Cell>, usize)> = Vec::new();
    let mut simple_found = false;

    let emit = |cells: Vec<Cell>, depth: usize, found: &mut Vec<(Vec<Cell>, usize)>| -> bool {
        if cells.len() < params.min_size {
            return false;
        }
        let simple = cells
            .iter()
            .all(|&c| kind_of(map, c) == FrontierCellKind::Simple);
        found.push((cells, depth));
        simple
    };

    let start = geom.index(robot);
    visited[start] = true;
    let mut layer = vec![robot];
    let mut depth = 0usize;
    while !layer.is_empty() {
        let mut next = Vec::new();
        for &c in &layer {
            for (dx, dy) in NEIGHBOURS_8 {
                let nb = c.offset(dx, dy);
                if !map.contains(nb) {
                    continue;
                }
                let j = geom.index(nb);
                match map.state_at(j) {
                    CellState::Unknown if !seen_frontier[j] => {
                        if kind_of(map, nb) != FrontierCellKind::NotFrontier {
                            let comp = flood_component(map, nb, &mut seen_frontier);
                            simple_found |= emit(comp, depth, &mut found);
                        }
                    }
                    CellState::DynamicObstacle if !seen_dynamic[j] => {
                        // scan the whole blob's border for frontier cells
                        let mut queue = VecDeque::from([nb]);
                        seen_dynamic[j] = true;
                        while let Some(b) = queue.pop_front() {
                            for (ex, ey) in NEIGHBOURS_8 {
                                let m = b.offset(ex, ey);
                                if !map.contains(m) {
                                    continue;
                                }
                                let k = geom.index(m);
                                match map.state_at(k) {
                                    CellState::DynamicObstacle if !seen_dynamic[k] => {
                                        seen_dynamic[k] = true;
                                        queue.push_back(m);
                                    }
                                    CellState::Unknown
                                        if !seen_frontier[k]
                                            && kind_of(map, m) != FrontierCellKind::NotFrontier =>
                                    {
                                        let comp = flood_component(map, m, &mut seen_frontier);
                                        simple_found |= emit(comp, depth, &mut found);
                                    }
                                    _ => {}
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
            for (dx, dy) in NEIGHBOURS_4 {
                let nb = c.offset(dx, dy);
                if map.state(nb) == CellState::Free {
                    let j = geom.index(nb);
                    if !visited[j] {
                        visited[j] = true;
                        next.push(nb);
                    }
                }
            }
        }
        if simple_found && !params.exhaustive {
            break;
        }
        layer = next;
        depth += 1;
    }

    found
        .into_iter()
        .map(|(cells, d)| assemble(cells, map, robot, reach, params.thresh, now, d, None))
        .collect()
}
