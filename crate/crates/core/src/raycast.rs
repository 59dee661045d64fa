//! Grid traversal along a straight segment.
//!
//! Amanatides & Woo style stepping: every cell the segment passes through is
//! visited exactly once, consecutive cells are 4-adjacent, and the walk always
//! ends on the cell containing the end point. When the segment crosses a cell
//! corner exactly, the x step is taken first.

use crate::gridmap::{Cell, GridGeometry, Point};

/// Iterator over the cells crossed by a segment, with the distance (meters)
/// from the start at which each cell is entered.
#[derive(Debug, Clone)]
pub struct GridRay {
    cur: (i64, i64),
    step: (i64, i64),
    t_max: (f64, f64),
    t_delta: (f64, f64),
    remaining_x: u64,
    remaining_y: u64,
    entry: f64,
    started: bool,
}

impl GridRay {
    /// Builds a traversal from `start` to `end`, both in world coordinates.
    ///
    /// Cells outside the grid are still produced; callers decide when to stop.
    pub fn new(geom: &GridGeometry, start: Point, end: Point) -> Self {
        let res = geom.resolution;
        let sx = (start.x - geom.origin.x) / res;
        let sy = (start.y - geom.origin.y) / res;
        let ex = (end.x - geom.origin.x) / res;
        let ey = (end.y - geom.origin.y) / res;
        let c0 = (sx.floor() as i64, sy.floor() as i64);
        let c1 = (ex.floor() as i64, ey.floor() as i64);

        let dx = end.x - start.x;
        let dy = end.y - start.y;
        let len = (dx * dx + dy * dy).sqrt();
        let (ux, uy) = if len > 0.0 {
            (dx / len, dy / len)
        } else {
            (0.0, 0.0)
        };

        let step_x = (c1.0 - c0.0).signum();
        let step_y = (c1.1 - c0.1).signum();

        // distance along the ray to the first vertical / horizontal grid line
        let axis = |s: f64, u: f64, step: i64| -> (f64, f64) {
            if step == 0 || u == 0.0 {
                return (f64::INFINITY, f64::INFINITY);
            }
            let boundary = if step > 0 { s.floor() + 1.0 } else { s.floor() };
            (((boundary - s) * res / u).abs(), (res / u).abs())
        };
        let (tmx, tdx) = axis(sx, ux, step_x);
        let (tmy, tdy) = axis(sy, uy, step_y);

        Self {
            cur: c0,
            step: (step_x, step_y),
            t_max: (tmx, tmy),
            t_delta: (tdx, tdy),
            remaining_x: c0.0.abs_diff(c1.0),
            remaining_y: c0.1.abs_diff(c1.1),
            entry: 0.0,
            started: false,
        }
    }
}

impl Iterator for GridRay {
    type Item = (Cell, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            return Some((Cell::new(self.cur.0, self.cur.1), 0.0));
        }
        let step_x = match (self.remaining_x > 0, self.remaining_y > 0) {
            (false, false) => return None,
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.t_max.0 <= self.t_max.1,
        };
        if step_x {
            self.cur.0 += self.step.0;
            self.entry = self.t_max.0;
            self.t_max.0 += self.t_delta.0;
            self.remaining_x -= 1;
        } else {
            self.cur.1 += self.step.1;
            self.entry = self.t_max.1;
            self.t_max.1 += self.t_delta.1;
            self.remaining_y -= 1;
        }
        Some((Cell::new(self.cur.0, self.cur.1), self.entry))
    }
}
