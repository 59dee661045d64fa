//! Scenario files.
//!
//! A scenario is a plain text file made of `[section]` blocks holding
//! `key = value` lines. `#` starts a comment everywhere except inside the
//! `[map]` block, where it is a wall. The map block is the ASCII floor plan,
//! top row first: `#` static obstacle, `.` free, `R` robot start (free).
//!
//! ```text
//! name = corridor
//! [world]
//! resolution = 0.1
//! tick = 0.1
//! [sensor]
//! range = 8
//! [actor]
//! waypoints = 1.0,0.5 4.0,0.5
//! speed = 1.0
//! radius = 0.25
//! [map]
//! ######
//! #R...#
//! ######
//! ```
//!
//! Actors may repeat; every other section appears at most once.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmap::{Cell, CellState, GridMap, Point, NEIGHBOURS_4};
use crate::metrics::LossParams;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid {field}: {msg}")]
    Invalid { field: String, msg: String },
}

fn invalid(field: impl Into<String>, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorParams {
    /// Maximum range, meters.
    pub range: f64,
    pub ray_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub range: f64,
    /// Security radius added to an actor's footprint, meters.
    pub inflation: f64,
    /// Probability of missing an actor that is in view.
    pub dropout: f64,
}

/// A scripted pedestrian walking a closed loop of waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub waypoints: Vec<Point>,
    /// Walking speed, m/s. Zero parks the actor on its first waypoint.
    pub speed: f64,
    pub radius: f64,
    /// Pause at each waypoint, seconds; one value per waypoint.
    pub dwell: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Ground-truth floor plan, only `Free` and `StaticObstacle` cells.
    pub static_map: GridMap,
    pub resolution: f64,
    pub robot_start: Point,
    pub robot_speed: f64,
    pub actors: Vec<Actor>,
    pub sensor: SensorParams,
    pub detector: DetectorParams,
    pub tick: f64,
    pub min_frontier_size: usize,
    pub time_limit: f64,
    /// How long the robot may go without a reachable goal before giving up.
    pub stuck_grace: f64,
    /// Each episode shifts every actor's script by a seeded offset drawn
    /// uniformly from `[0, phase_jitter)` seconds.
    pub phase_jitter: f64,
    /// Calibrated lower bounds for the loss, when known.
    pub bounds: Option<LossParams>,
}

impl Default for SensorParams {
    fn default() -> Self {
        Self {
            range: 8.0,
            ray_count: 360,
        }
    }
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            range: 8.0,
            inflation: 0.3,
            dropout: 0.0,
        }
    }
}

#[derive(Default)]
struct Section {
    entries: Vec<(usize, String, String)>,
    line: usize,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        let pos = self.entries.iter().position(|(_, k, _)| k == key)?;
        let (line, _, v) = self.entries.remove(pos);
        Some((line, v))
    }

    fn number(&mut self, key: &str, default: f64) -> Result<f64, ScenarioError> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v.trim().parse::<f64>().map_err(|_| ScenarioError::Parse {
                line,
                msg: format!("'{key}' expects a number, got '{v}'"),
            }),
        }
    }

    fn count(&mut self, key: &str, default: usize) -> Result<usize, ScenarioError> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => v.trim().parse::<usize>().map_err(|_| ScenarioError::Parse {
                line,
                msg: format!("'{key}' expects a non-negative integer, got '{v}'"),
            }),
        }
    }

    fn finish(self, name: &str) -> Result<(), ScenarioError> {
        match self.entries.first() {
            None => Ok(()),
            Some((line, k, _)) => Err(ScenarioError::Parse {
                line: *line,
                msg: format!("unknown key '{k}' in [{name}]"),
            }),
        }
    }
}

fn parse_point(s: &str, line: usize) -> Result<Point, ScenarioError> {
    let bad = || ScenarioError::Parse {
        line,
        msg: format!("expected a point 'x,y', got '{s}'"),
    };
    let (x, y) = s.split_once(',').ok_or_else(bad)?;
    Ok(Point::new(
        x.trim().parse().map_err(|_| bad())?,
        y.trim().parse().map_err(|_| bad())?,
    ))
}

impl Scenario {
    /// Reads and validates a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut s = Self::parse(&text)?;
        if s.name.is_empty() {
            s.name = path
                .file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(s)
    }

    /// Parses and validates scenario text.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut top = Section::default();
        let mut world = Section::default();
        let mut sensor = Section::default();
        let mut detector = Section::default();
        let mut bounds: Option<Section> = None;
        let mut actors: Vec<Section> = Vec::new();
        let mut rows: Vec<(usize, String)> = Vec::new();
        let mut seen: Vec<String> = Vec::new();

        #[derive(PartialEq)]
        enum Where {
            Top,
            World,
            Sensor,
            Detector,
            Bounds,
            Actor,
            Map,
        }
        let mut at = Where::Top;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.starts_with('[') && trimmed.ends_with(']') {
                let name = trimmed[1..trimmed.len() - 1].trim().to_ascii_lowercase();
                if name != "actor" && seen.contains(&name) {
                    return Err(ScenarioError::Parse {
                        line,
                        msg: format!("section [{name}] appears twice"),
                    });
                }
                seen.push(name.clone());
                at = match name.as_str() {
                    "world" => Where::World,
                    "sensor" => Where::Sensor,
                    "detector" => Where::Detector,
                    "bounds" => {
                        bounds = Some(Section {
                            line,
                            ..Default::default()
                        });
                        Where::Bounds
                    }
                    "actor" => {
                        actors.push(Section {
                            line,
                            ..Default::default()
                        });
                        Where::Actor
                    }
                    "map" => Where::Map,
                    other => {
                        return Err(ScenarioError::Parse {
                            line,
                            msg: format!("unknown section [{other}]"),
                        })
                    }
                };
                continue;
            }
            if at == Where::Map {
                if !trimmed.is_empty() {
                    rows.push((line, trimmed.to_string()));
                }
                continue;
            }
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| ScenarioError::Parse {
                    line,
                    msg: format!("expected 'key = value', got '{content}'"),
                })?;
            let entry = (line, k.trim().to_ascii_lowercase(), v.trim().to_string());
            match at {
                Where::Top => top.entries.push(entry),
                Where::World => world.entries.push(entry),
                Where::Sensor => sensor.entries.push(entry),
                Where::Detector => detector.entries.push(entry),
                Where::Bounds => bounds.as_mut().expect("opened").entries.push(entry),
                Where::Actor => actors.last_mut().expect("opened").entries.push(entry),
                Where::Map => unreachable!(),
            }
        }

        let name = top.take("name").map(|(_, v)| v).unwrap_or_default();
        top.finish("top level")?;

        let resolution = world.number("resolution", 0.1)?;
        let tick = world.number("tick", 0.1)?;
        let robot_speed = world.number("robot_speed", 1.0)?;
        let time_limit = world.number("time_limit", 900.0)?;
        let stuck_grace = world.number("stuck_grace", 30.0)?;
        let phase_jitter = world.number("phase_jitter", 0.0)?;
        let min_frontier_size = world.count("min_frontier_size", 30)?;
        world.finish("world")?;

        let defaults = SensorParams::default();
        let sensor_params = SensorParams {
            range: sensor.number("range", defaults.range)?,
            ray_count: sensor.count("ray_count", defaults.ray_count)?,
        };
        sensor.finish("sensor")?;

        let defaults = DetectorParams::default();
        let detector_params = DetectorParams {
            range: detector.number("range", defaults.range)?,
            inflation: detector.number("inflation", defaults.inflation)?,
            dropout: detector.number("dropout", defaults.dropout)?,
        };
        detector.finish("detector")?;

        let bounds = match bounds {
            None => None,
            Some(mut b) => {
                let line = b.line;
                let l = b.number("length", f64::NAN)?;
                let t = b.number("time", f64::NAN)?;
                let lambda = b.number("lambda", 20.0)?;
                b.finish("bounds")?;
                if l.is_nan() || t.is_nan() {
                    return Err(ScenarioError::Parse {
                        line,
                        msg: "[bounds] needs both 'length' and 'time'".into(),
                    });
                }
                Some(LossParams::new(l, t, lambda).map_err(|e| invalid("bounds", e.to_string()))?)
            }
        };

        let mut actor_list = Vec::new();
        for (n, mut a) in actors.into_iter().enumerate() {
            let waypoints = match a.take("waypoints") {
                None => Vec::new(),
                Some((line, v)) => v
                    .split_whitespace()
                    .map(|p| parse_point(p, line))
                    .collect::<Result<Vec<_>, _>>()?,
            };
            let speed = a.number("speed", 1.0)?;
            let radius = a.number("radius", 0.25)?;
            let dwell = match a.take("dwell") {
                None => vec![0.0],
                Some((line, v)) => v
                    .split_whitespace()
                    .map(|d| {
                        d.parse::<f64>().map_err(|_| ScenarioError::Parse {
                            line,
                            msg: format!("'dwell' expects numbers, got '{d}'"),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            };
            a.finish("actor")?;
            let field = |f: &str| format!("actor {} {f}", n + 1);
            if waypoints.is_empty() {
                return Err(invalid(
                    field("waypoints"),
                    "an actor needs at least one waypoint",
                ));
            }
            let dwell = match dwell.len() {
                1 => vec![dwell[0]; waypoints.len()],
                k if k == waypoints.len() => dwell,
                k => {
                    return Err(invalid(
                        field("dwell"),
                        format!(
                            "give one value or one per waypoint ({} waypoints, {k} values)",
                            waypoints.len()
                        ),
                    ))
                }
            };
            actor_list.push(Actor {
                waypoints,
                speed,
                radius,
                dwell,
            });
        }

        if rows.is_empty() {
            return Err(invalid("map", "missing [map] block"));
        }
        let width = rows[0].1.chars().count();
        let mut start = None;
        let mut plain: Vec<String> = Vec::with_capacity(rows.len());
        for (r, (line, row)) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(ScenarioError::Parse {
                    line: *line,
                    msg: format!(
                        "map row has {} columns, expected {width}",
                        row.chars().count()
                    ),
                });
            }
            let mut out = String::with_capacity(width);
            for (c, ch) in row.chars().enumerate() {
                match ch {
                    '#' | '.' => out.push(ch),
                    'R' => {
                        if start.is_some() {
                            return Err(ScenarioError::Parse {
                                line: *line,
                                msg: "more than one robot start 'R'".into(),
                            });
                        }
                        start = Some((c, r));
                        out.push('.');
                    }
                    other => {
                        return Err(ScenarioError::Parse {
                            line: *line,
                            msg: format!("unexpected map character '{other}'"),
                        })
                    }
                }
            }
            plain.push(out);
        }
        if !(resolution > 0.0) {
            return Err(invalid("resolution", "must be positive"));
        }
        let refs: Vec<&str> = plain.iter().map(|s| s.as_str()).collect();
        let static_map =
            GridMap::from_rows(&refs, resolution).map_err(|e| invalid("map", e.to_string()))?;
        let (sx, sy) = start.ok_or_else(|| invalid("robot_start", "the map has no 'R'"))?;
        let start_cell = Cell::new(sx as i64, (rows.len() - 1 - sy) as i64);

        let scenario = Scenario {
            name,
            robot_start: static_map.center(start_cell),
            static_map,
            resolution,
            robot_speed,
            actors: actor_list,
            sensor: sensor_params,
            detector: detector_params,
            tick,
            min_frontier_size,
            time_limit,
            stuck_grace,
            phase_jitter,
            bounds,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Checks every invariant, naming the offending field.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(field, format!("must be positive (got {v})")))
            }
        };
        let non_negative = |field: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(field, format!("must be non-negative (got {v})")))
            }
        };
        positive("resolution", self.resolution)?;
        positive("tick", self.tick)?;
        positive("robot_speed", self.robot_speed)?;
        positive("time_limit", self.time_limit)?;
        non_negative("stuck_grace", self.stuck_grace)?;
        non_negative("phase_jitter", self.phase_jitter)?;
        positive("sensor.range", self.sensor.range)?;
        if self.sensor.ray_count < 8 {
            return Err(invalid(
                "sensor.ray_count",
                format!("needs at least 8 rays (got {})", self.sensor.ray_count),
            ));
        }
        positive("detector.range", self.detector.range)?;
        non_negative("detector.inflation", self.detector.inflation)?;
        if !(0.0..=1.0).contains(&self.detector.dropout) {
            return Err(invalid(
                "detector.dropout",
                format!("must lie in [0, 1] (got {})", self.detector.dropout),
            ));
        }
        if self.min_frontier_size == 0 {
            return Err(invalid("min_frontier_size", "must be at least 1"));
        }
        let start = self.static_map.cell_at(self.robot_start);
        if self.static_map.get(start) != Some(CellState::Free) {
            return Err(invalid("robot_start", "must lie on a free cell"));
        }
        for (n, a) in self.actors.iter().enumerate() {
            let field = |f: &str| format!("actor {} {f}", n + 1);
            if a.waypoints.is_empty() {
                return Err(invalid(
                    field("waypoints"),
                    "an actor needs at least one waypoint",
                ));
            }
            if a.dwell.len() != a.waypoints.len() {
                return Err(invalid(field("dwell"), "one value per waypoint"));
            }
            non_negative(&field("speed"), a.speed)?;
            non_negative(&field("radius"), a.radius)?;
            for &d in &a.dwell {
                non_negative(&field("dwell"), d)?;
            }
            for p in &a.waypoints {
                if !(p.x.is_finite() && p.y.is_finite()) {
                    return Err(invalid(field("waypoints"), "coordinates must be finite"));
                }
            }
        }
        Ok(())
    }

    /// The part of the floor plan a robot can ever observe: free cells
    /// connected to the start, and the obstacle cells bordering them. Every
    /// other cell is left unknown, so it carries no label when maps are
    /// compared.
    pub fn ground_truth(&self) -> GridMap {
        let m = &self.static_map;
        let geom = m.geometry();
        let mut out = GridMap::new(geom.width, geom.height, geom.resolution, geom.origin)
            .expect("valid geometry");
        let start = m.cell_at(self.robot_start);
        let mut seen = vec![false; geom.len()];
        let mut queue = VecDeque::from([start]);
        seen[geom.index(start)] = true;
        while let Some(c) = queue.pop_front() {
            out.set(c, CellState::Free);
            for (dx, dy) in NEIGHBOURS_4 {
                let n = c.offset(dx, dy);
                match m.get(n) {
                    Some(CellState::Free) => {
                        let j = geom.index(n);
                        if !seen[j] {
                            seen[j] = true;
                            queue.push_back(n);
                        }
                    }
                    Some(CellState::StaticObstacle) => out.set(n, CellState::StaticObstacle),
                    _ => {}
                }
            }
        }
        out
    }
}
