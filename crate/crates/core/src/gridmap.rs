//! Four-state occupancy grid.
//!
//! The map keeps two layers: the non-dynamic knowledge of every cell
//! (`Unknown`, `Free` or `StaticObstacle`) and an overlay of cells currently
//! covered by detected dynamic obstacles. The visible state of a cell is
//! `DynamicObstacle` while the overlay covers it and its knowledge otherwise,
//! so clearing a detection restores exactly what was known before.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raycast::GridRay;

/// A world coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Integer grid coordinates. `y` grows upwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i64,
    pub y: i64,
}

impl Cell {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn offset(&self, dx: i64, dy: i64) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }

    /// Euclidean distance in cells.
    pub fn distance(&self, other: &Cell) -> f64 {
        ((self.x - other.x) as f64).hypot((self.y - other.y) as f64)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// 8-neighbourhood offsets in a fixed order.
pub const NEIGHBOURS_8: [(i64, i64); 8] = [
    (1, 0),
    (0, 1),
    (-1, 0),
    (0, -1),
    (1, 1),
    (-1, 1),
    (-1, -1),
    (1, -1),
];

/// 4-neighbourhood offsets in a fixed order.
pub const NEIGHBOURS_4: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Free,
    StaticObstacle,
    DynamicObstacle,
}

impl CellState {
    /// Gray level used by the PGM export.
    pub fn gray(self) -> u8 {
        match self {
            CellState::Unknown => 128,
            CellState::Free => 220,
            CellState::StaticObstacle => 0,
            CellState::DynamicObstacle => 64,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("map dimensions must be positive (got {width}x{height})")]
    BadDimensions { width: usize, height: usize },
    #[error("resolution must be positive and finite (got {0})")]
    BadResolution(f64),
    #[error("point ({x:.3}, {y:.3}) lies outside the map")]
    OutOfBounds { x: f64, y: f64 },
    #[error("cell {0} lies outside the map")]
    CellOutOfBounds(Cell),
    #[error("maps have different geometry")]
    GeometryMismatch,
    #[error("ground truth has no labeled cells")]
    EmptyGroundTruth,
    #[error("unexpected character {ch:?} in map row {row}")]
    BadChar { ch: char, row: usize },
    #[error("map rows have different lengths")]
    RaggedRows,
}

/// Size, resolution and placement of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: usize,
    pub height: usize,
    /// Meters per cell.
    pub resolution: f64,
    /// World coordinate of the lower-left corner of cell (0, 0).
    pub origin: Point,
}

impl GridGeometry {
    pub fn contains(&self, cell: Cell) -> bool {
        cell.x >= 0
            && cell.y >= 0
            && (cell.x as usize) < self.width
            && (cell.y as usize) < self.height
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.y as usize * self.width + cell.x as usize
    }

    pub fn cell_of(&self, index: usize) -> Cell {
        Cell::new((index % self.width) as i64, (index / self.width) as i64)
    }

    /// Cell containing a world point, whether or not it is inside the grid.
    pub fn cell_at(&self, p: Point) -> Cell {
        Cell::new(
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn center(&self, cell: Cell) -> Point {
        Point::new(
            self.origin.x + (cell.x as f64 + 0.5) * self.resolution,
            self.origin.y + (cell.y as f64 + 0.5) * self.resolution,
        )
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A detected dynamic obstacle: footprint plus security inflation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub center: Point,
    pub radius: f64,
}

/// One range measurement: where the ray stopped and whether it stopped on a
/// static surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRay {
    pub end: Point,
    pub hit: bool,
}

#[derive(Debug, Clone)]
pub struct GridMap {
    geom: GridGeometry,
    knowledge: Vec<CellState>,
    dynamic: Vec<bool>,
    dynamic_cells: Vec<usize>,
    known: usize,
}

impl PartialEq for GridMap {
    fn eq(&self, other: &Self) -> bool {
        self.geom == other.geom
            && self.knowledge == other.knowledge
            && self.dynamic == other.dynamic
    }
}

impl GridMap {
    /// An all-`Unknown` map.
    pub fn new(
        width: usize,
        height: usize,
        resolution: f64,
        origin: Point,
    ) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::BadDimensions { width, height });
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(MapError::BadResolution(resolution));
        }
        let n = width * height;
        Ok(Self {
            geom: GridGeometry {
                width,
                height,
                resolution,
                origin,
            },
            knowledge: vec![CellState::Unknown; n],
            dynamic: vec![false; n],
            dynamic_cells: Vec::new(),
            known: 0,
        })
    }

    /// Builds a map from text rows, top row first.
    ///
    /// `#` static, `.` free, `?` unknown, `D` dynamic obstacle (over unknown
    /// knowledge), `d` dynamic obstacle over free knowledge.
    pub fn from_rows(rows: &[&str], resolution: f64) -> Result<Self, MapError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        let mut map = GridMap::new(width, height, resolution, Point::new(0.0, 0.0))?;
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(MapError::RaggedRows);
            }
            let y = (height - 1 - r) as i64;
            for (x, ch) in row.chars().enumerate() {
                let cell = Cell::new(x as i64, y);
                match ch {
                    '#' => map.set(cell, CellState::StaticObstacle),
                    '.' => map.set(cell, CellState::Free),
                    '?' => {}
                    'D' => map.set(cell, CellState::DynamicObstacle),
                    'd' => {
                        map.set(cell, CellState::Free);
                        map.set(cell, CellState::DynamicObstacle);
                    }
                    _ => return Err(MapError::BadChar { ch, row: r }),
                }
            }
        }
        Ok(map)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geom
    }

    pub fn width(&self) -> usize {
        self.geom.width
    }

    pub fn height(&self) -> usize {
        self.geom.height
    }

    pub fn resolution(&self) -> f64 {
        self.geom.resolution
    }

    pub fn origin(&self) -> Point {
        self.geom.origin
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.geom.contains(cell)
    }

    pub fn cell_at(&self, p: Point) -> Cell {
        self.geom.cell_at(p)
    }

    pub fn center(&self, cell: Cell) -> Point {
        self.geom.center(cell)
    }

    /// Visible state, `None` outside the grid.
    pub fn get(&self, cell: Cell) -> Option<CellState> {
        self.contains(cell)
            .then(|| self.state_at(self.geom.index(cell)))
    }

    /// Visible state; out-of-bounds cells read as `StaticObstacle`.
    #[inline]
    pub fn state(&self, cell: Cell) -> CellState {
        if self.contains(cell) {
            self.state_at(self.geom.index(cell))
        } else {
            CellState::StaticObstacle
        }
    }

    #[inline]
    pub fn state_at(&self, index: usize) -> CellState {
        if self.dynamic[index] {
            CellState::DynamicObstacle
        } else {
            self.knowledge[index]
        }
    }

    /// Non-dynamic knowledge of a cell (the backing layer).
    pub fn knowledge(&self, cell: Cell) -> Option<CellState> {
        self.contains(cell)
            .then(|| self.knowledge[self.geom.index(cell)])
    }

    /// Visible states in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = CellState> + '_ {
        (0..self.geom.len()).map(|i| self.state_at(i))
    }

    /// Number of cells whose non-dynamic knowledge is not `Unknown`.
    pub fn known_count(&self) -> usize {
        self.known
    }

    /// Overwrites a cell. Setting `DynamicObstacle` covers the cell with the
    /// overlay and keeps its knowledge (static knowledge is reset to unknown
    /// so the overlay invariant holds).
    pub fn set(&mut self, cell: Cell, state: CellState) {
        let i = self.geom.index(cell);
        match state {
            CellState::DynamicObstacle => {
                if self.knowledge[i] == CellState::StaticObstacle {
                    self.set_knowledge(i, CellState::Unknown);
                }
                if !self.dynamic[i] {
                    self.dynamic[i] = true;
                    self.dynamic_cells.push(i);
                }
            }
            s => {
                self.clear_dynamic(i);
                self.set_knowledge(i, s);
            }
        }
    }

    /// Marks the robot's own cell as observed free ground.
    pub fn force_free(&mut self, cell: Cell) {
        if self.contains(cell) {
            let i = self.geom.index(cell);
            self.clear_dynamic(i);
            self.set_knowledge(i, CellState::Free);
        }
    }

    fn set_knowledge(&mut self, i: usize, s: CellState) -> bool {
        debug_assert!(s != CellState::DynamicObstacle);
        let old = self.knowledge[i];
        if old == s {
            return false;
        }
        match (old == CellState::Unknown, s == CellState::Unknown) {
            (true, false) => self.known += 1,
            (false, true) => self.known -= 1,
            _ => {}
        }
        self.knowledge[i] = s;
        if s == CellState::StaticObstacle {
            self.clear_dynamic(i);
        }
        true
    }

    fn clear_dynamic(&mut self, i: usize) {
        if self.dynamic[i] {
            self.dynamic[i] = false;
            if let Some(pos) = self.dynamic_cells.iter().position(|&c| c == i) {
                self.dynamic_cells.swap_remove(pos);
            }
        }
    }

    /// Integrates one range scan taken from `pose`.
    ///
    /// Cells crossed before each ray's end point become free; the end cell of
    /// a hit ray becomes a static obstacle unless a detection currently covers
    /// it. Within one scan a hit wins over a pass-through, which keeps the
    /// operation idempotent. Dynamic cells that a ray crosses have their
    /// knowledge updated to free and turn visibly free once their detection
    /// clears. Returns how many cells changed knowledge.
    pub fn integrate_scan(&mut self, pose: Point, scan: &[ScanRay]) -> Result<usize, MapError> {
        let robot = self.cell_at(pose);
        if !self.contains(robot) {
            return Err(MapError::OutOfBounds {
                x: pose.x,
                y: pose.y,
            });
        }
        let n = self.geom.len();
        // 0 = untouched, 1 = free, 2 = hit
        let mut target = vec![0u8; n];
        let mut touched = Vec::new();
        for ray in scan {
            let end = self.cell_at(ray.end);
            for (cell, _) in GridRay::new(&self.geom, pose, ray.end) {
                if !self.contains(cell) {
                    break;
                }
                let i = self.geom.index(cell);
                if cell == end {
                    if ray.hit {
                        if target[i] == 0 {
                            touched.push(i);
                        }
                        target[i] = 2;
                    }
                    break;
                }
                if target[i] == 0 {
                    target[i] = 1;
                    touched.push(i);
                }
            }
        }
        let mut changed = 0;
        for i in touched {
            let s = match target[i] {
                2 if self.dynamic[i] => continue,
                2 => CellState::StaticObstacle,
                _ => CellState::Free,
            };
            if self.set_knowledge(i, s) {
                changed += 1;
            }
        }
        Ok(changed)
    }

    fn disc_cells(&self, d: &Detection, pose: Point, range: f64) -> Vec<usize> {
        let lo = self.cell_at(Point::new(d.center.x - d.radius, d.center.y - d.radius));
        let hi = self.cell_at(Point::new(d.center.x + d.radius, d.center.y + d.radius));
        let mut out = Vec::new();
        for y in lo.y.max(0)..=hi.y.min(self.geom.height as i64 - 1) {
            for x in lo.x.max(0)..=hi.x.min(self.geom.width as i64 - 1) {
                let cell = Cell::new(x, y);
                let c = self.center(cell);
                if c.distance(&d.center) <= d.radius + 1e-9 && c.distance(&pose) <= range + 1e-9 {
                    out.push(self.geom.index(cell));
                }
            }
        }
        out
    }

    /// Replaces the dynamic overlay with the given detections.
    ///
    /// Cells whose center lies inside a detection disc and within
    /// `detection_range` of `pose` become `DynamicObstacle`, except static
    /// obstacles. Previously dynamic cells not covered any more fall back to
    /// their knowledge. Returns the number of cells whose visible state
    /// changed.
    pub fn mark_dynamic(
        &mut self,
        detections: &[Detection],
        pose: Point,
        detection_range: f64,
    ) -> usize {
        let n = self.geom.len();
        let mut covered = vec![false; n];
        let mut fresh = Vec::new();
        for d in detections {
            for i in self.disc_cells(d, pose, detection_range) {
                if !covered[i] && self.knowledge[i] != CellState::StaticObstacle {
                    covered[i] = true;
                    fresh.push(i);
                }
            }
        }
        let mut changed = 0;
        let previous = std::mem::take(&mut self.dynamic_cells);
        for &i in &previous {
            if !covered[i] {
                self.dynamic[i] = false;
                changed += 1;
            }
        }
        for &i in &fresh {
            if !self.dynamic[i] {
                changed += 1;
            }
            self.dynamic[i] = true;
        }
        self.dynamic_cells = fresh;
        changed
    }

    /// Writes detections into the knowledge layer as static obstacles, the way
    /// a map without a dynamic layer records them. `keep` (the robot's cell)
    /// is never overwritten. Returns the number of changed cells.
    pub fn mark_static(
        &mut self,
        detections: &[Detection],
        pose: Point,
        detection_range: f64,
        keep: Cell,
    ) -> usize {
        let keep = self.contains(keep).then(|| self.geom.index(keep));
        let mut changed = 0;
        for d in detections {
            for i in self.disc_cells(d, pose, detection_range) {
                if Some(i) != keep && self.set_knowledge(i, CellState::StaticObstacle) {
                    changed += 1;
                }
            }
        }
        changed
    }

    /// Number of cells currently covered by a detection.
    pub fn dynamic_count(&self) -> usize {
        self.dynamic_cells.len()
    }

    /// Copy of the map with the dynamic overlay removed.
    pub fn without_dynamic(&self) -> GridMap {
        let mut out = self.clone();
        for i in std::mem::take(&mut out.dynamic_cells) {
            out.dynamic[i] = false;
        }
        out
    }

    /// Copy of the map in which every dynamic cell is a static obstacle.
    pub fn with_dynamic_as_static(&self) -> GridMap {
        let mut out = self.clone();
        for i in std::mem::take(&mut out.dynamic_cells) {
            out.dynamic[i] = false;
            out.set_knowledge(i, CellState::StaticObstacle);
        }
        out
    }

    /// Cells within `radius` meters of a static obstacle (including the
    /// obstacles themselves).
    pub fn static_inflation(&self, radius: f64) -> Vec<bool> {
        let n = self.geom.len();
        let mut out: Vec<bool> = (0..n)
            .map(|i| self.knowledge[i] == CellState::StaticObstacle)
            .collect();
        if radius <= 0.0 {
            return out;
        }
        let r = (radius / self.geom.resolution).ceil() as i64;
        let r2 = radius / self.geom.resolution;
        let statics: Vec<usize> = (0..n)
            .filter(|&i| self.knowledge[i] == CellState::StaticObstacle)
            .collect();
        for i in statics {
            let c = self.geom.cell_of(i);
            for dy in -r..=r {
                for dx in -r..=r {
                    let n = c.offset(dx, dy);
                    if self.contains(n) && ((dx * dx + dy * dy) as f64).sqrt() <= r2 {
                        out[self.geom.index(n)] = true;
                    }
                }
            }
        }
        out
    }

    /// Binary PGM (P5), one pixel per cell, top row first.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.geom.width, self.geom.height).into_bytes();
        for y in (0..self.geom.height).rev() {
            for x in 0..self.geom.width {
                out.push(self.state_at(y * self.geom.width + x).gray());
            }
        }
        out
    }

    pub fn write_pgm(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&self.to_pgm())
    }
}

/// Label used when comparing maps: free or occupied, unknown cells carry none.
fn label(s: CellState) -> Option<bool> {
    match s {
        CellState::Unknown => None,
        CellState::Free => Some(false),
        CellState::StaticObstacle | CellState::DynamicObstacle => Some(true),
    }
}

/// Symmetric difference of the (cell, label) sets of two maps, normalised by
/// the number of labeled cells in the ground truth.
pub fn map_divergence(map: &GridMap, ground_truth: &GridMap) -> Result<f64, MapError> {
    if map.geom != ground_truth.geom {
        return Err(MapError::GeometryMismatch);
    }
    let mut gt_pairs = 0usize;
    let mut diff = 0usize;
    for i in 0..map.geom.len() {
        let a = label(map.state_at(i));
        let g = label(ground_truth.state_at(i));
        if g.is_some() {
            gt_pairs += 1;
        }
        diff += match (a, g) {
            (Some(x), Some(y)) if x != y => 2,
            (Some(_), None) | (None, Some(_)) => 1,
            _ => 0,
        };
    }
    if gt_pairs == 0 {
        return Err(MapError::EmptyGroundTruth);
    }
    Ok(diff as f64 / gt_pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip() -> GridMap {
        GridMap::new(10, 1, 1.0, Point::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn constructor_fills_unknown() {
        let m = GridMap::new(3, 3, 0.1, Point::new(0.0, 0.0)).unwrap();
        assert_eq!(m.cells().count(), 9);
        assert!(m.cells().all(|c| c == CellState::Unknown));
        let one = GridMap::new(1, 1, 1.0, Point::new(0.0, 0.0)).unwrap();
        assert_eq!(one.cells().collect::<Vec<_>>(), vec![CellState::Unknown]);
    }

    #[test]
    fn constructor_rejects_bad_geometry() {
        assert!(matches!(
            GridMap::new(0, 3, 0.1, Point::new(0.0, 0.0)),
            Err(MapError::BadDimensions { .. })
        ));
        assert!(matches!(
            GridMap::new(3, 3, 0.0, Point::new(0.0, 0.0)),
            Err(MapError::BadResolution(_))
        ));
    }

    #[test]
    fn single_ray_hand_trace() {
        // robot in cell 0, wall in cell 5
        let mut m = strip();
        m.force_free(Cell::new(0, 0));
        let scan = [ScanRay {
            end: Point::new(5.2, 0.5),
            hit: true,
        }];
        let changed = m.integrate_scan(Point::new(0.5, 0.5), &scan).unwrap();
        assert_eq!(changed, 5);
        let states: Vec<_> = m.cells().collect();
        use CellState::*;
        assert_eq!(
            states,
            vec![
                Free,
                Free,
                Free,
                Free,
                Free,
                StaticObstacle,
                Unknown,
                Unknown,
                Unknown,
                Unknown
            ]
        );
        assert_eq!(m.integrate_scan(Point::new(0.5, 0.5), &scan).unwrap(), 0);
    }

    #[test]
    fn scan_out_of_bounds_pose_is_an_error() {
        let mut m = strip();
        assert!(m.integrate_scan(Point::new(-1.0, 0.5), &[]).is_err());
    }

    #[test]
    fn hit_on_dynamic_cell_is_not_written_static() {
        let mut m = strip();
        m.set(Cell::new(5, 0), CellState::DynamicObstacle);
        let scan = [ScanRay {
            end: Point::new(5.5, 0.5),
            hit: true,
        }];
        m.integrate_scan(Point::new(0.5, 0.5), &scan).unwrap();
        assert_eq!(m.state(Cell::new(5, 0)), CellState::DynamicObstacle);
    }

    #[test]
    fn dynamic_disc_and_revert() {
        let mut m =
            GridMap::from_rows(&[".....", ".....", ".....", ".....", "....."], 0.1).unwrap();
        let before = m.clone();
        let d = Detection {
            center: Point::new(0.25, 0.25),
            radius: 0.25,
        };
        let changed = m.mark_dynamic(&[d], Point::new(0.05, 0.05), 8.0);
        assert!(changed > 0);
        assert_eq!(m.state(Cell::new(2, 2)), CellState::DynamicObstacle);
        assert_eq!(m.state(Cell::new(4, 4)), CellState::Free);
        assert_eq!(m.mark_dynamic(&[], Point::new(0.05, 0.05), 8.0), changed);
        assert_eq!(m, before);
    }

    #[test]
    fn static_wins_over_dynamic() {
        let mut m =
            GridMap::from_rows(&[".....", ".....", "..#..", ".....", "....."], 0.1).unwrap();
        let d = Detection {
            center: Point::new(0.25, 0.25),
            radius: 0.2,
        };
        m.mark_dynamic(&[d], Point::new(0.05, 0.05), 8.0);
        assert_eq!(m.state(Cell::new(2, 2)), CellState::StaticObstacle);
        assert_eq!(m.state(Cell::new(1, 2)), CellState::DynamicObstacle);
    }

    #[test]
    fn detection_range_limits_marking() {
        let mut m = GridMap::from_rows(&["........."], 1.0).unwrap();
        let d = Detection {
            center: Point::new(6.5, 0.5),
            radius: 1.0,
        };
        m.mark_dynamic(&[d], Point::new(0.5, 0.5), 6.0);
        assert_eq!(m.state(Cell::new(5, 0)), CellState::DynamicObstacle);
        assert_eq!(m.state(Cell::new(6, 0)), CellState::DynamicObstacle);
        assert_eq!(m.state(Cell::new(7, 0)), CellState::Free);
    }

    #[test]
    fn mark_static_spares_the_kept_cell() {
        let mut m = GridMap::from_rows(&["....."], 1.0).unwrap();
        let d = Detection {
            center: Point::new(1.5, 0.5),
            radius: 1.0,
        };
        let changed = m.mark_static(&[d], Point::new(0.5, 0.5), 8.0, Cell::new(0, 0));
        assert_eq!(changed, 2);
        assert_eq!(m.state(Cell::new(0, 0)), CellState::Free);
        assert_eq!(m.state(Cell::new(2, 0)), CellState::StaticObstacle);
    }

    #[test]
    fn divergence_identity_and_all_unknown() {
        let gt = GridMap::from_rows(&["#..#", "#..#"], 0.1).unwrap();
        assert_eq!(map_divergence(&gt, &gt).unwrap(), 0.0);
        let blank = GridMap::new(4, 2, 0.1, Point::new(0.0, 0.0)).unwrap();
        assert_eq!(map_divergence(&blank, &gt).unwrap(), 1.0);
    }

    #[test]
    fn divergence_four_cell_toy() {
        // gt: 2 free, 2 occupied; map matches two of them, unknown elsewhere.
        // pairs: gt = {a:f, b:f, c:o, d:o}, map = {a:f, c:o}; sym diff = {b:f, d:o}
        let gt = GridMap::from_rows(&["..##"], 0.1).unwrap();
        let a = GridMap::from_rows(&[".?#?"], 0.1).unwrap();
        assert_eq!(map_divergence(&a, &gt).unwrap(), 0.5);
    }

    #[test]
    fn divergence_counts_mismatch_twice_and_extra_once() {
        let gt = GridMap::from_rows(&["..??"], 0.1).unwrap();
        let a = GridMap::from_rows(&["#.#?"], 0.1).unwrap();
        // cell0 mismatch (2), cell2 extra (1) over 2 gt pairs
        assert_eq!(map_divergence(&a, &gt).unwrap(), 1.5);
        let d = GridMap::from_rows(&["D.??"], 0.1).unwrap();
        assert_eq!(map_divergence(&d, &gt).unwrap(), 1.0);
    }

    #[test]
    fn divergence_errors() {
        let gt = GridMap::from_rows(&["??"], 0.1).unwrap();
        assert_eq!(map_divergence(&gt, &gt), Err(MapError::EmptyGroundTruth));
        let other = GridMap::from_rows(&["???"], 0.1).unwrap();
        assert_eq!(map_divergence(&other, &gt), Err(MapError::GeometryMismatch));
    }

    #[test]
    fn pgm_layout() {
        let m = GridMap::from_rows(&["#.", "?D"], 0.1).unwrap();
        let pgm = m.to_pgm();
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(&pgm[header.len()..], &[0, 220, 128, 64]);
    }

    #[test]
    fn inflation_radius() {
        let m = GridMap::from_rows(&["#....", "....."], 1.0).unwrap();
        let infl = m.static_inflation(1.5);
        assert!(infl[m.geometry().index(Cell::new(0, 1))]);
        assert!(infl[m.geometry().index(Cell::new(1, 0))]);
        assert!(!infl[m.geometry().index(Cell::new(3, 1))]);
        assert_eq!(m.static_inflation(0.0).iter().filter(|&&b| b).count(), 1);
    }
}
