//! Deterministic tick-based world: floor plan, scripted actors, range sensor,
//! actor detector, grid planner and the episode loop.

mod actors;
mod episode;
mod planner;
mod scenario;
mod sensors;

pub use actors::{actor_positions, shifted_positions};
pub use episode::{run_episode, Episode, EpisodeError, EpisodeResult, PathPoint, Termination};
pub use planner::plan_path;
pub use scenario::{Actor, DetectorParams, Scenario, ScenarioError, SensorParams};
pub use sensors::{detect, detect_actors, line_of_sight, scan, simulate_lidar};
