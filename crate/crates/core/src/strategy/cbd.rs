use serde::{Deserialize, Serialize};

use super::memory::update_with;
use super::{select_where, CoeffError, CostCoefficients, GoalDecision, GoalSource, MemoryEntry};
use crate::frontier::{
    frontier_search, frontier_search_with, Frontier, FrontierError, LazyReach, SearchParams,
};
use crate::gridmap::{GridMap, Point};

/// Result of one goal-selection round.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Goal(GoalDecision),
    /// Frontiers exist but none can be approached right now.
    NoReachableGoal,
    /// Nothing left to explore.
    Done,
}

/// A frontier with the cost it was given in the last round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub frontier: Frontier,
    pub source: GoalSource,
    pub cost: f64,
}

/// The cost-based dynamic-aware explorer: frontier search, memory upkeep and
/// goal choice, one round per call to [`Explorer::decide`].
#[derive(Debug, Clone)]
pub struct Explorer {
    coeffs: CostCoefficients,
    sensor_range: f64,
    min_size: usize,
    memory: Vec<MemoryEntry>,
    last_selected: Option<Frontier>,
    scored: Vec<Scored>,
}

impl Explorer {
    pub fn new(
        coeffs: CostCoefficients,
        sensor_range: f64,
        min_size: usize,
    ) -> Result<Self, CoeffError> {
        coeffs.validate()?;
        Ok(Self {
            coeffs,
            sensor_range,
            min_size,
            memory: Vec::new(),
            last_selected: None,
            scored: Vec::new(),
        })
    }

    pub fn coefficients(&self) -> &CostCoefficients {
        &self.coeffs
    }

    pub fn memory(&self) -> &[MemoryEntry] {
        &self.memory
    }

    /// Every frontier considered in the last round, cheapest first.
    pub fn last_scored(&self) -> &[Scored] {
        &self.scored
    }

    /// Carries identity and first detection time over to candidates that
    /// cover a remembered frontier or the one selected last round. Without
    /// this, a postponed frontier that the search keeps finding would look
    /// brand new every round and never age.
    fn inherit(&self, candidates: &mut [Frontier]) {
        let mut used = Vec::new();
        for c in candidates.iter_mut() {
            let older = self
                .memory
                .iter()
                .map(|e| (&e.frontier, e.first_seen))
                .chain(self.last_selected.iter().map(|f| (f, f.first_seen)))
                .filter(|(f, _)| f.overlaps(c) && !used.contains(&f.id))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)));
            if let Some((f, first_seen)) = older {
                used.push(f.id);
                c.id = f.id;
                c.first_seen = c.first_seen.min(first_seen);
            }
        }
    }

    /// Runs one round from the robot's position at time `now`.
    pub fn decide(
        &mut self,
        map: &GridMap,
        robot: Point,
        now: f64,
    ) -> Result<Outcome, FrontierError> {
        let cell = map.cell_at(robot);
        let params = SearchParams::new(self.min_size, self.coeffs.thresh);
        let reach = LazyReach::new(map, cell);
        let mut candidates = frontier_search_with(map, cell, &params, now, &reach)?;
        self.inherit(&mut candidates);
        let memory = update_with(
            std::mem::take(&mut self.memory),
            &candidates,
            map,
            cell,
            self.min_size,
            self.coeffs.thresh,
            &reach,
        );

        if candidates.is_empty() && memory.is_empty() {
            self.scored.clear();
            self.last_selected = None;
            // Someone standing in a narrow passage leaves only a sliver of
            // frontier, too small to be a candidate, and a detection hugging
            // the robot hides everything behind it. Neither means the map is
            // finished.
            if map.dynamic_count() > 0 {
                let sliver = frontier_search_with(
                    map,
                    cell,
                    &SearchParams::new(1, self.coeffs.thresh),
                    now,
                    &reach,
                )?
                .iter()
                .any(|f| f.size_dynamic > 0);
                if sliver
                    || !frontier_search(&map.without_dynamic(), cell, &params, now)?.is_empty()
                {
                    return Ok(Outcome::NoReachableGoal);
                }
            }
            return Ok(Outcome::Done);
        }

        let (goal, memory, scored) = select_where(
            &candidates,
            memory,
            robot,
            now,
            &self.coeffs,
            self.sensor_range,
            |f| reach.get().can_approach(map, f.travel_point),
        );
        self.memory = memory;
        self.last_selected = goal
            .as_ref()
            .and_then(|g| scored.iter().find(|s| s.frontier.id == g.frontier_id))
            .map(|s| s.frontier.clone());
        self.scored = scored;
        Ok(match goal {
            Some(g) => Outcome::Goal(g),
            None => Outcome::NoReachableGoal,
        })
    }
}
