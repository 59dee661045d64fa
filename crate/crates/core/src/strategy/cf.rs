use std::borrow::Cow;

use super::{GoalDecision, GoalSource, Outcome};
use crate::frontier::{frontier_search_with, Frontier, FrontierError, LazyReach, SearchParams};
use crate::gridmap::{Cell, GridMap, Point};

/// Closest-frontier baseline. It has no notion of dynamic obstacles: any
/// dynamic cell is read as a static one, so a frontier next to a person is no
/// frontier at all.
#[derive(Debug, Clone)]
pub struct CfExplorer {
    min_size: usize,
}

fn closest(
    map: &GridMap,
    robot: Point,
    min_size: usize,
    now: f64,
) -> Result<(Vec<Frontier>, Option<usize>), FrontierError> {
    let view: Cow<GridMap> = if map.dynamic_count() > 0 {
        Cow::Owned(map.with_dynamic_as_static())
    } else {
        Cow::Borrowed(map)
    };
    let cell = view.cell_at(robot);
    let reach = LazyReach::new(&view, cell);
    let found = frontier_search_with(&view, cell, &SearchParams::new(min_size, 20.0), now, &reach)?;
    let best = found
        .iter()
        .enumerate()
        .filter(|(_, f)| reach.get().can_approach(&view, f.travel_point))
        .min_by(|(_, a), (_, b)| {
            robot
                .distance(&a.target)
                .total_cmp(&robot.distance(&b.target))
                .then(a.id.cmp(&b.id))
        })
        .map(|(i, _)| i);
    Ok((found, best))
}

impl CfExplorer {
    pub fn new(min_size: usize) -> Self {
        Self { min_size }
    }

    pub fn decide(
        &mut self,
        map: &GridMap,
        robot: Point,
        now: f64,
    ) -> Result<Outcome, FrontierError> {
        let (found, best) = closest(map, robot, self.min_size, now)?;
        Ok(match best {
            Some(i) => {
                let f = &found[i];
                Outcome::Goal(GoalDecision {
                    travel_point: f.travel_point,
                    target: f.target,
                    source: GoalSource::Candidate,
                    frontier_id: f.id,
                    kind: f.kind,
                    cost: robot.distance(&f.target),
                    time: now,
                })
            }
            None if found.is_empty() => Outcome::Done,
            None => Outcome::NoReachableGoal,
        })
    }
}

/// Travel point of the closest frontier, or `None` when the baseline
/// considers the map finished.
pub fn cf_select_goal(map: &GridMap, robot: Cell, min_size: usize) -> Option<Cell> {
    if !map.contains(robot) {
        return None;
    }
    let (found, best) = closest(map, map.center(robot), min_size, 0.0).ok()?;
    best.map(|i| found[i].travel_point)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fully_explored_map_has_no_goal() {
        let m = GridMap::from_rows(&["####", "#..#", "####"], 1.0).unwrap();
        assert_eq!(cf_select_goal(&m, Cell::new(1, 1), 1), None);
    }

    #[test]
    fn room_with_blocked_doors_looks_finished() {
        let m = GridMap::from_rows(
            &[
                "??????????",
                "####d#####",
                "#........#",
                "#........#",
                "#####d####",
                "??????????",
            ],
            1.0,
        )
        .unwrap();
        assert_eq!(cf_select_goal(&m, Cell::new(3, 3), 1), None);
    }

    #[test]
    fn single_frontier_is_chosen() {
        let m = GridMap::from_rows(&["#???#", "#...#", "#...#", "#####"], 1.0).unwrap();
        let g = cf_select_goal(&m, Cell::new(2, 1), 1).unwrap();
        assert_eq!(g, Cell::new(2, 3));
    }
}
