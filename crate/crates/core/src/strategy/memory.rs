use serde::{Deserialize, Serialize};

use crate::frontier::{assemble, kind_of, Frontier, FrontierCellKind, FrontierType, LazyReach};
use crate::gridmap::{Cell, GridMap};

/// A postponed non-simple frontier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub frontier: Frontier,
    /// Time the frontier was first detected; never reset by updates.
    pub first_seen: f64,
}

impl MemoryEntry {
    pub fn new(frontier: Frontier) -> Self {
        Self {
            first_seen: frontier.first_seen,
            frontier,
        }
    }
}

/// Refreshes the memory against the latest map and frontier search.
///
/// Entries sharing a cell with a current candidate are dropped, since the
/// search already reports them. The rest are re-validated cell by cell; an
/// entry survives if enough of its cells are still frontier cells and it has
/// not turned simple. Sizes, type and travel point are recomputed, while the
/// id and first detection time are kept. Output is sorted by id.
pub fn update_active_memory(
    memory: Vec<MemoryEntry>,
    candidates: &[Frontier],
    map: &GridMap,
    robot: Cell,
    min_size: usize,
    thresh: f64,
) -> Vec<MemoryEntry> {
    update_with(
        memory,
        candidates,
        map,
        robot,
        min_size,
        thresh,
        &LazyReach::new(map, robot),
    )
}

pub(crate) fn update_with(
    memory: Vec<MemoryEntry>,
    candidates: &[Frontier],
    map: &GridMap,
    robot: Cell,
    min_size: usize,
    thresh: f64,
    reach: &LazyReach,
) -> Vec<MemoryEntry> {
    let mut out: Vec<MemoryEntry> = memory
        .into_iter()
        .filter(|e| !candidates.iter().any(|c| c.overlaps(&e.frontier)))
        .filter_map(|e| {
            let cells: Vec<Cell> = e
                .frontier
                .cells
                .iter()
                .copied()
                .filter(|&c| map.contains(c) && kind_of(map, c) != FrontierCellKind::NotFrontier)
                .collect();
            if cells.is_empty() || cells.len() < min_size {
                return None;
            }
            let f = assemble(
                cells,
                map,
                robot,
                reach,
                thresh,
                e.first_seen,
                e.frontier.distance,
                Some(e.frontier.id),
            )
            .ok()?;
            (f.kind != FrontierType::Simple).then_some(MemoryEntry {
                frontier: f,
                first_seen: e.first_seen,
            })
        })
        .collect();
    out.sort_by_key(|e| e.frontier.id);
    out
}
