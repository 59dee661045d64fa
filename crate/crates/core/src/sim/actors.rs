use super::scenario::{Actor, Scenario};
use crate::gridmap::Point;

impl Actor {
    /// Length of one full loop in seconds, pauses included.
    pub fn cycle_duration(&self) -> f64 {
        if self.speed <= 0.0 || self.waypoints.len() < 2 {
            return 0.0;
        }
        let n = self.waypoints.len();
        (0..n)
            .map(|i| {
                self.dwell[i]
                    + self.waypoints[i].distance(&self.waypoints[(i + 1) % n]) / self.speed
            })
            .sum()
    }

    /// Position at time `t`: pause at each waypoint, then walk straight to the
    /// next one, looping back to the first.
    pub fn position(&self, t: f64) -> Point {
        let cycle = self.cycle_duration();
        if cycle <= 0.0 {
            return self.waypoints[0];
        }
        let mut rem = t.max(0.0) % cycle;
        let n = self.waypoints.len();
        for i in 0..n {
            let a = self.waypoints[i];
            if rem < self.dwell[i] {
                return a;
            }
            rem -= self.dwell[i];
            let b = self.waypoints[(i + 1) % n];
            let leg = a.distance(&b) / self.speed;
            if rem < leg {
                let f = rem / leg;
                return Point::new(a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f);
            }
            rem -= leg;
        }
        self.waypoints[0]
    }
}

/// Actor positions at time `t`, unshifted.
pub fn actor_positions(scenario: &Scenario, t: f64) -> Vec<Point> {
    scenario.actors.iter().map(|a| a.position(t)).collect()
}

/// Actor positions with a per-actor time shift.
pub fn shifted_positions(scenario: &Scenario, t: f64, offsets: &[f64]) -> Vec<Point> {
    scenario
        .actors
        .iter()
        .zip(offsets)
        .map(|(a, off)| a.position(t + off))
        .collect()
}
