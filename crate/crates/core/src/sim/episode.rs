use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::actors::shifted_positions;
use super::planner::plan_path;
use super::scenario::{Scenario, ScenarioError};
use super::sensors::{detect, scan};
use crate::frontier::FrontierError;
use crate::gridmap::{Cell, CellState, GridMap, MapError, Point};
use crate::strategy::{
    should_resend, CfExplorer, CoeffError, CostCoefficients, Explorer, GoalDecision, Outcome,
    StrategyKind,
};

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Coefficients(#[from] CoeffError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Frontier(#[from] FrontierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The strategy found nothing left to explore.
    Complete,
    TimeLimit,
    /// No reachable goal for longer than the scenario's grace period.
    Stuck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub strategy: StrategyKind,
    pub seed: u64,
    #[serde(skip)]
    pub final_map: GridMap,
    /// Robot position at every tick, sampled before it moves.
    pub path: Vec<PathPoint>,
    pub tot_length: f64,
    pub tot_time: f64,
    /// Whether the map gained knowledge in each tick.
    pub per_tick_gain: Vec<bool>,
    pub termination: Termination,
    /// Every goal sent to navigation, in order.
    pub goal_log: Vec<GoalDecision>,
    /// Number of goal-selection rounds.
    pub decisions: usize,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
enum Brain {
    Cbd(Explorer),
    Cf(CfExplorer),
}

impl Brain {
    fn decide(&mut self, map: &GridMap, robot: Point, now: f64) -> Result<Outcome, FrontierError> {
        match self {
            Brain::Cbd(e) => e.decide(map, robot, now),
            Brain::Cf(e) => e.decide(map, robot, now),
        }
    }
}

/// One exploration run, advanced a tick at a time.
///
/// Each tick: actors move to their scripted positions, the robot scans and
/// runs the detector, the strategy picks a goal if anything changed (or if
/// it has no goal, or has reached it), and the robot walks along an A* path
/// for one tick. CBD keeps detections in a dynamic overlay; CF writes them
/// into its map as ordinary obstacles.
#[derive(Debug, Clone)]
pub struct Episode<'a> {
    scenario: &'a Scenario,
    strategy: StrategyKind,
    seed: u64,
    rng: ChaCha8Rng,
    offsets: Vec<f64>,
    map: GridMap,
    pose: Point,
    ticks: u64,
    brain: Brain,
    goal: Option<GoalDecision>,
    route: VecDeque<Cell>,
    replan: bool,
    arrived: bool,
    blocked_since: Option<f64>,
    length: f64,
    path: Vec<PathPoint>,
    gains: Vec<bool>,
    goal_log: Vec<GoalDecision>,
    decisions: usize,
    termination: Option<Termination>,
}

impl<'a> Episode<'a> {
    pub fn new(
        scenario: &'a Scenario,
        strategy: StrategyKind,
        coeffs: &CostCoefficients,
        seed: u64,
    ) -> Result<Self, EpisodeError> {
        scenario.validate()?;
        coeffs.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offsets = scenario
            .actors
            .iter()
            .map(|_| {
                let u: f64 = rng.gen();
                u * scenario.phase_jitter
            })
            .collect();
        let g = scenario.static_map.geometry();
        let map = GridMap::new(g.width, g.height, g.resolution, g.origin)?;
        let brain = match strategy {
            StrategyKind::Cbd => Brain::Cbd(Explorer::new(
                *coeffs,
                scenario.sensor.range,
                scenario.min_frontier_size,
            )?),
            StrategyKind::Cf => Brain::Cf(CfExplorer::new(scenario.min_frontier_size)),
        };
        Ok(Self {
            scenario,
            strategy,
            seed,
            rng,
            offsets,
            map,
            pose: scenario.robot_start,
            ticks: 0,
            brain,
            goal: None,
            route: VecDeque::new(),
            replan: false,
            arrived: false,
            blocked_since: None,
            length: 0.0,
            path: Vec::new(),
            gains: Vec::new(),
            goal_log: Vec::new(),
            decisions: 0,
            termination: None,
        })
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn pose(&self) -> Point {
        self.pose
    }

    /// Simulation time of the next tick.
    pub fn time(&self) -> f64 {
        self.ticks as f64 * self.scenario.tick
    }

    pub fn goal(&self) -> Option<&GoalDecision> {
        self.goal.as_ref()
    }

    pub fn decisions(&self) -> usize {
        self.decisions
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    /// The CBD explorer's state, `None` for the baseline.
    pub fn explorer(&self) -> Option<&Explorer> {
        match &self.brain {
            Brain::Cbd(e) => Some(e),
            Brain::Cf(_) => None,
        }
    }

    /// True actor positions at simulation time `t` for this episode.
    pub fn actors_at(&self, t: f64) -> Vec<Point> {
        shifted_positions(self.scenario, t, &self.offsets)
    }

    fn route_blocked(&self) -> bool {
        let last = self.route.len().saturating_sub(1);
        self.route
            .iter()
            .enumerate()
            .any(|(k, &c)| match self.map.state(c) {
                CellState::Free => false,
                CellState::Unknown => k != last,
                _ => true,
            })
    }

    fn collides(&self, actors: &[Point], from: Point, to: Point) -> bool {
        self.scenario.actors.iter().zip(actors).any(|(a, c)| {
            let d = to.distance(c);
            d < a.radius && d < from.distance(c)
        })
    }

    fn advance(&mut self, actors: &[Point]) {
        let mut budget = self.scenario.robot_speed * self.scenario.tick;
        while budget > 1e-12 {
            let Some(&next) = self.route.front() else {
                break;
            };
            match self.map.state(next) {
                CellState::Free => {}
                CellState::Unknown if self.route.len() == 1 => {
                    // next to the frontier cell we were heading for
                    self.route.clear();
                    break;
                }
                _ => {
                    self.replan = true;
                    break;
                }
            }
            let target = self.map.center(next);
            let d = self.pose.distance(&target);
            let reach = d <= budget;
            let new = if reach {
                target
            } else {
                let f = budget / d;
                Point::new(
                    self.pose.x + (target.x - self.pose.x) * f,
                    self.pose.y + (target.y - self.pose.y) * f,
                )
            };
            if self.collides(actors, self.pose, new) {
                break;
            }
            let step = d.min(budget);
            self.length += step;
            budget -= step;
            self.pose = new;
            if reach {
                self.route.pop_front();
            }
        }
    }

    /// Runs one tick. Returns the termination once the episode is over.
    pub fn step(&mut self) -> Result<Option<Termination>, EpisodeError> {
        if let Some(t) = self.termination {
            return Ok(Some(t));
        }
        let sc = self.scenario;
        let now = self.time();
        let actors = self.actors_at(now);
        let robot_cell = self.map.cell_at(self.pose);

        let rays = scan(sc, self.pose, &actors);
        let known_before = self.map.known_count();
        let mut changed = self.map.integrate_scan(self.pose, &rays)?;
        // only the range sensor adds knowledge; detector footprints do not
        self.gains.push(self.map.known_count() > known_before);
        let detections = detect(sc, self.pose, &actors, &mut self.rng);
        changed += match self.strategy {
            StrategyKind::Cbd => self
                .map
                .mark_dynamic(&detections, self.pose, sc.detector.range),
            StrategyKind::Cf => {
                self.map
                    .mark_static(&detections, self.pose, sc.detector.range, robot_cell)
            }
        };
        self.map.force_free(robot_cell);
        self.path.push(PathPoint {
            t: now,
            x: self.pose.x,
            y: self.pose.y,
        });
        self.ticks += 1;

        if self.route_blocked() {
            self.replan = true;
        }

        if changed > 0 || self.goal.is_none() || self.arrived {
            self.decisions += 1;
            match self.brain.decide(&self.map, self.pose, now)? {
                Outcome::Done => {
                    self.termination = Some(Termination::Complete);
                    return Ok(self.termination);
                }
                Outcome::NoReachableGoal => {
                    self.goal = None;
                    self.route.clear();
                    self.arrived = false;
                }
                Outcome::Goal(g) => {
                    if should_resend(self.goal.as_ref(), &g) {
                        self.goal_log.push(g.clone());
                        self.goal = Some(g);
                        self.replan = true;
                        self.arrived = false;
                    }
                }
            }
        }

        if self.replan {
            if let Some(goal) = &self.goal {
                match plan_path(&self.map, robot_cell, goal.travel_point) {
                    Some(p) => self.route = p.into_iter().skip(1).collect(),
                    None => {
                        self.goal = None;
                        self.route.clear();
                    }
                }
            }
            self.replan = false;
        }

        if self.goal.is_none() {
            let since = *self.blocked_since.get_or_insert(now);
            if now - since >= sc.stuck_grace {
                self.termination = Some(Termination::Stuck);
                return Ok(self.termination);
            }
        } else {
            self.blocked_since = None;
        }

        self.advance(&actors);
        if self.goal.is_some() && self.route.is_empty() {
            self.arrived = true;
        }

        if self.time() >= sc.time_limit - 1e-9 {
            self.termination = Some(Termination::TimeLimit);
        }
        Ok(self.termination)
    }

    /// Steps until the episode ends.
    pub fn run(mut self) -> Result<EpisodeResult, EpisodeError> {
        while self.step()?.is_none() {}
        Ok(self.finish())
    }

    /// Packs the outcome so far. An episode that has not ended reports a
    /// time limit.
    pub fn finish(self) -> EpisodeResult {
        EpisodeResult {
            strategy: self.strategy,
            seed: self.seed,
            tot_time: self.ticks as f64 * self.scenario.tick,
            final_map: self.map,
            path: self.path,
            tot_length: self.length,
            per_tick_gain: self.gains,
            termination: self.termination.unwrap_or(Termination::TimeLimit),
            goal_log: self.goal_log,
            decisions: self.decisions,
        }
    }
}

/// Runs one full episode.
pub fn run_episode(
    scenario: &Scenario,
    strategy: StrategyKind,
    coeffs: &CostCoefficients,
    seed: u64,
) -> Result<EpisodeResult, EpisodeError> {
    Episode::new(scenario, strategy, coeffs, seed)?.run()
}
