//! Range sensor and actor detector.

use rand::Rng;

use super::actors::actor_positions;
use super::scenario::Scenario;
use crate::gridmap::{CellState, Detection, Point, ScanRay};
use crate::raycast::GridRay;

/// Distance along a unit ray to the first point of a disc, if any.
pub(crate) fn ray_disc(origin: Point, dir: (f64, f64), center: Point, radius: f64) -> Option<f64> {
    let fx = origin.x - center.x;
    let fy = origin.y - center.y;
    let c = fx * fx + fy * fy - radius * radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let b = fx * dir.0 + fy * dir.1;
    let disc = b * b - c;
    if disc < 0.0 || b > 0.0 {
        return None;
    }
    Some(-b - disc.sqrt())
}

/// One 360 degree scan against the floor plan and actor discs at the given
/// positions. Rays are spread uniformly, offset by half a step so none runs
/// exactly along a grid line.
pub fn scan(scenario: &Scenario, pose: Point, actors: &[Point]) -> Vec<ScanRay> {
    let n = scenario.sensor.ray_count;
    let range = scenario.sensor.range;
    let map = &scenario.static_map;
    let geom = map.geometry();
    (0..n)
        .map(|k| {
            let a = (k as f64 + 0.5) * std::f64::consts::TAU / n as f64;
            let dir = (a.cos(), a.sin());
            let at = |t: f64| Point::new(pose.x + dir.0 * t, pose.y + dir.1 * t);

            let block = scenario
                .actors
                .iter()
                .zip(actors)
                .filter_map(|(act, c)| ray_disc(pose, dir, *c, act.radius))
                .fold(f64::INFINITY, f64::min);

            let mut walk = GridRay::new(geom, pose, at(range)).peekable();
            let mut wall = None;
            while let Some((cell, entry)) = walk.next() {
                if entry >= block {
                    break;
                }
                match map.get(cell) {
                    Some(CellState::StaticObstacle) => {
                        // end in the middle of the hit cell's chord
                        let exit = walk.peek().map_or(range, |n| n.1).min(range);
                        wall = Some((entry + exit) * 0.5);
                        break;
                    }
                    None => {
                        wall = Some(entry);
                        break;
                    }
                    _ => {}
                }
            }
            match wall {
                Some(t) if t < block => ScanRay {
                    end: at(t),
                    hit: map.get(map.cell_at(at(t))) == Some(CellState::StaticObstacle),
                },
                _ if block < range => ScanRay {
                    end: at(block),
                    hit: false,
                },
                _ => ScanRay {
                    end: at(range),
                    hit: false,
                },
            }
        })
        .collect()
}

/// Scan with actors at their unshifted positions at time `t`.
pub fn simulate_lidar(scenario: &Scenario, pose: Point, t: f64) -> Vec<ScanRay> {
    scan(scenario, pose, &actor_positions(scenario, t))
}

/// True when no static cell lies between the two points.
pub fn line_of_sight(scenario: &Scenario, from: Point, to: Point) -> bool {
    let map = &scenario.static_map;
    GridRay::new(map.geometry(), from, to).all(|(c, _)| map.get(c) == Some(CellState::Free))
}

/// True when the centre or one of eight points on a ring at three quarters
/// of the radius is in sight. A person half hidden by a door jamb is still
/// seen.
fn body_in_sight(scenario: &Scenario, pose: Point, c: Point, radius: f64) -> bool {
    line_of_sight(scenario, pose, c)
        || (0..8).any(|k| {
            let a = k as f64 * std::f64::consts::FRAC_PI_4;
            let r = 0.75 * radius;
            line_of_sight(
                scenario,
                pose,
                Point::new(c.x + r * a.cos(), c.y + r * a.sin()),
            )
        })
}

/// Detections of the actors at `actors`. Every actor in range and in sight
/// consumes one draw from `rng`, whether or not it is then dropped.
pub fn detect(
    scenario: &Scenario,
    pose: Point,
    actors: &[Point],
    rng: &mut impl Rng,
) -> Vec<Detection> {
    let det = &scenario.detector;
    let mut out = Vec::new();
    for (a, &c) in scenario.actors.iter().zip(actors) {
        if pose.distance(&c) > det.range || !body_in_sight(scenario, pose, c, a.radius) {
            continue;
        }
        let roll: f64 = rng.gen();
        if roll < det.dropout {
            continue;
        }
        out.push(Detection {
            center: c,
            radius: a.radius + det.inflation,
        });
    }
    out
}

/// Detections of the actors at their unshifted positions at time `t`.
pub fn detect_actors(
    scenario: &Scenario,
    pose: Point,
    t: f64,
    rng: &mut impl Rng,
) -> Vec<Detection> {
    detect(scenario, pose, &actor_positions(scenario, t), rng)
}
