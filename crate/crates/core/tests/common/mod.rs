#![allow(dead_code)]

use std::path::PathBuf;

use dynexplore::frontier::{frontier_search, Frontier, FrontierId, FrontierType, SearchParams};
use dynexplore::gridmap::map_divergence;
use dynexplore::sim::{Episode, EpisodeResult, Scenario, Termination};
use dynexplore::strategy::{cf_select_goal, CostCoefficients, StrategyKind};

pub const P: CostCoefficients = CostCoefficients::PROPOSED;

pub const STATIC: [&str; 6] = [
    "static/two_rooms.scn",
    "static/ring.scn",
    "static/pillars.scn",
    "static/switchback.scn",
    "static/three_rooms.scn",
    "static/offset_door.scn",
];

pub fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name);
    Scenario::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// What went wrong when CBD and CF part ways on an actor-free map.
pub type Mismatch = String;

/// Steps CBD and CF side by side. Each round the frontier CBD ranks first
/// must be the component CF heads for. Returns the number of rounds compared
/// and both final divergences.
pub fn lockstep(s: &Scenario) -> Result<(usize, f64, f64), Mismatch> {
    let mut cbd = Episode::new(s, StrategyKind::Cbd, &P, 0).unwrap();
    let mut cf = Episode::new(s, StrategyKind::Cf, &P, 0).unwrap();
    let mut rounds = 0;
    loop {
        let cell = cbd.map().cell_at(cbd.pose());
        let before = cbd.decisions();
        let (a, b) = (cbd.step().unwrap(), cf.step().unwrap());
        let t = cbd.time();
        if a != b
            || cbd.map() != cf.map()
            || cbd.pose() != cf.pose()
            || cbd.decisions() != cf.decisions()
        {
            return Err(format!("runs drift apart at t={t:.1}"));
        }
        if cbd.decisions() > before && a.is_none() {
            let chosen: &Frontier = &cbd.explorer().unwrap().last_scored()[0].frontier;
            let tp = cf_select_goal(cf.map(), cell, s.min_frontier_size)
                .ok_or(format!("CF has no goal at t={t:.1}"))?;
            let theirs = frontier_search(
                cf.map(),
                cell,
                &SearchParams::new(s.min_frontier_size, 20.0),
                0.0,
            )
            .unwrap()
            .into_iter()
            .find(|f| f.travel_point == tp)
            .ok_or(format!("CF goal is not a frontier at t={t:.1}"))?;
            if chosen.kind != FrontierType::Simple || chosen.cells != theirs.cells {
                return Err(format!("different components at t={t:.1}"));
            }
            rounds += 1;
        }
        if let Some(term) = a {
            if term != Termination::Complete {
                return Err(format!("ended {term:?}"));
            }
            let gt = s.ground_truth();
            return Ok((
                rounds,
                map_divergence(cbd.map(), &gt).unwrap(),
                map_divergence(cf.map(), &gt).unwrap(),
            ));
        }
    }
}

/// One CBD round while the doorway was blocked.
#[derive(Debug, Clone, Copy)]
pub struct BlockedRound {
    pub time: f64,
    pub id: FrontierId,
    pub first_seen: f64,
    pub cost: f64,
}

/// Runs the door fixture with CBD, recording every round before the person
/// steps out of the doorway at `until` seconds.
pub fn door_rounds(s: &Scenario, until: f64) -> (Vec<BlockedRound>, EpisodeResult) {
    let mut ep = Episode::new(s, StrategyKind::Cbd, &P, 0).unwrap();
    let mut rounds = Vec::new();
    let mut seen = 0;
    loop {
        let now = ep.time();
        let done = ep.step().unwrap().is_some();
        if done {
            break;
        }
        if ep.decisions() > seen && now < until {
            for sc in ep.explorer().unwrap().last_scored() {
                if sc.frontier.size_dynamic > 0 {
                    rounds.push(BlockedRound {
                        time: now,
                        id: sc.frontier.id,
                        first_seen: sc.frontier.first_seen,
                        cost: sc.cost,
                    });
                }
            }
        }
        seen = ep.decisions();
    }
    (rounds, ep.finish())
}
