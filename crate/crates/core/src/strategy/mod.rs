//! Goal selection: the cost-based dynamic-aware explorer (CBD) and the
//! closest-frontier baseline (CF).

mod cbd;
mod cf;
mod cost;
mod memory;

use serde::{Deserialize, Serialize};

use crate::frontier::{Frontier, FrontierId, FrontierType};
use crate::gridmap::{Cell, Point};

pub use cbd::{Explorer, Outcome, Scored};
pub use cf::{cf_select_goal, CfExplorer};
pub use cost::{frontier_cost, CoeffError, CostCoefficients};
pub use memory::{update_active_memory, MemoryEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Cbd,
    Cf,
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StrategyKind::Cbd => "cbd",
            StrategyKind::Cf => "cf",
        })
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cbd" => Ok(StrategyKind::Cbd),
            "cf" => Ok(StrategyKind::Cf),
            other => Err(format!("unknown strategy '{other}' (expected cbd or cf)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalSource {
    Candidate,
    Memory,
}

/// A goal handed to the navigation layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalDecision {
    pub travel_point: Cell,
    pub target: Point,
    pub source: GoalSource,
    pub frontier_id: FrontierId,
    pub kind: FrontierType,
    pub cost: f64,
    /// Simulation time of the decision.
    pub time: f64,
}

/// Whether a new decision has to be sent to navigation.
pub fn should_resend(previous: Option<&GoalDecision>, next: &GoalDecision) -> bool {
    previous.is_none_or(|p| p.travel_point != next.travel_point)
}

/// Scores candidates and memory, returns the cheapest and the new memory.
///
/// Ties on cost go to the lower frontier id. Every unselected non-simple
/// frontier ends up in the returned memory; frontiers already remembered keep
/// their first detection time. `None` means there is nothing left to explore.
pub fn select_goal(
    candidates: &[Frontier],
    memory: Vec<MemoryEntry>,
    robot: Point,
    now: f64,
    coeffs: &CostCoefficients,
    sensor_range: f64,
) -> (Option<GoalDecision>, Vec<MemoryEntry>) {
    let (goal, memory, _) =
        select_where(candidates, memory, robot, now, coeffs, sensor_range, |_| {
            true
        });
    (goal, memory)
}

/// [`select_goal`] restricted to frontiers accepted by `eligible`; rejected
/// non-simple frontiers still go to memory.
pub(crate) fn select_where(
    candidates: &[Frontier],
    memory: Vec<MemoryEntry>,
    robot: Point,
    now: f64,
    coeffs: &CostCoefficients,
    sensor_range: f64,
    eligible: impl Fn(&Frontier) -> bool,
) -> (Option<GoalDecision>, Vec<MemoryEntry>, Vec<Scored>) {
    let mut pool: Vec<(MemoryEntry, GoalSource)> = candidates
        .iter()
        .map(|f| (MemoryEntry::new(f.clone()), GoalSource::Candidate))
        .chain(memory.into_iter().map(|e| (e, GoalSource::Memory)))
        .collect();
    let mut scored: Vec<(f64, usize)> = pool
        .iter()
        .enumerate()
        .map(|(i, (e, _))| {
            (
                frontier_cost(&e.frontier, robot, now, coeffs, sensor_range),
                i,
            )
        })
        .collect();
    scored.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(pool[a.1].0.frontier.id.cmp(&pool[b.1].0.frontier.id))
    });

    let report: Vec<Scored> = scored
        .iter()
        .map(|&(cost, i)| Scored {
            frontier: pool[i].0.frontier.clone(),
            source: pool[i].1,
            cost,
        })
        .collect();

    let chosen = scored
        .iter()
        .find(|&&(_, i)| eligible(&pool[i].0.frontier))
        .copied();
    let goal = chosen.map(|(cost, i)| {
        let f = &pool[i].0.frontier;
        GoalDecision {
            travel_point: f.travel_point,
            target: f.target,
            source: pool[i].1,
            frontier_id: f.id,
            kind: f.kind,
            cost,
            time: now,
        }
    });
    let skip = chosen.map(|(_, i)| i);
    let mut kept: Vec<MemoryEntry> = Vec::new();
    for (i, (entry, _)) in pool.drain(..).enumerate() {
        if Some(i) != skip && entry.frontier.kind != FrontierType::Simple {
            kept.push(entry);
        }
    }
    kept.sort_by_key(|e| e.frontier.id);
    (goal, kept, report)
}
