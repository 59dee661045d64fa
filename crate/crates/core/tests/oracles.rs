//! Brute-force reference implementations checked against the library on
//! seeded random grids.

use std::collections::{BTreeSet, HashSet};

use dynexplore::frontier::{
    classify_cell, classify_frontier, frontier_search, FrontierCellKind, FrontierType, SearchParams,
};
use dynexplore::gridmap::{map_divergence, Cell, CellState, GridMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CHARS: [char; 5] = ['#', '.', '?', 'D', 'd'];

fn random_rows(rng: &mut impl Rng, w: usize, h: usize, weights: &[u32; 5]) -> Vec<String> {
    let total: u32 = weights.iter().sum();
    (0..h)
        .map(|_| {
            (0..w)
                .map(|_| {
                    let mut r = rng.gen_range(0..total);
                    for (k, &wt) in weights.iter().enumerate() {
                        if r < wt {
                            return CHARS[k];
                        }
                        r -= wt;
                    }
                    unreachable!()
                })
                .collect()
        })
        .collect()
}

fn grid(rows: &[String]) -> GridMap {
    let r: Vec<&str> = rows.iter().map(|s| s.as_str()).collect();
    GridMap::from_rows(&r, 1.0).unwrap()
}

fn cells(m: &GridMap) -> impl Iterator<Item = Cell> + '_ {
    (0..m.height() as i64).flat_map(move |y| (0..m.width() as i64).map(move |x| Cell::new(x, y)))
}

/// The (cell, occupied) pairs of every labeled cell.
fn labeled(m: &GridMap) -> HashSet<(i64, i64, bool)> {
    cells(m)
        .filter_map(|c| match m.state(c) {
            CellState::Unknown => None,
            CellState::Free => Some((c.x, c.y, false)),
            _ => Some((c.x, c.y, true)),
        })
        .collect()
}

fn divergence_oracle(m: &GridMap, gt: &GridMap) -> f64 {
    let (a, g) = (labeled(m), labeled(gt));
    a.symmetric_difference(&g).count() as f64 / g.len() as f64
}

#[test]
fn divergence_matches_set_oracle_on_every_2x2_pair() {
    let all: Vec<String> = (0..4usize.pow(4))
        .map(|mut k| {
            (0..4)
                .map(|_| {
                    let c = ['#', '.', '?', 'D'][k % 4];
                    k /= 4;
                    c
                })
                .collect()
        })
        .collect();
    let maps: Vec<GridMap> = all
        .iter()
        .map(|s| grid(&[s[..2].to_string(), s[2..].to_string()]))
        .collect();
    let mut checked = 0;
    for gt in &maps {
        if labeled(gt).is_empty() {
            assert!(map_divergence(&maps[0], gt).is_err());
            continue;
        }
        for m in &maps {
            assert_eq!(map_divergence(m, gt).unwrap(), divergence_oracle(m, gt));
            checked += 1;
        }
    }
    assert!(checked > 60_000);
}

#[test]
fn divergence_matches_set_oracle_on_every_3x3_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gts: Vec<GridMap> = (0..12)
        .map(|_| grid(&random_rows(&mut rng, 3, 3, &[1, 1, 1, 0, 0])))
        .filter(|g| !labeled(g).is_empty())
        .collect();
    for mut k in 0..3usize.pow(9) {
        let s: String = (0..9)
            .map(|_| {
                let c = ['#', '.', '?'][k % 3];
                k /= 3;
                c
            })
            .collect();
        let m = grid(&[
            s[0..3].to_string(),
            s[3..6].to_string(),
            s[6..9].to_string(),
        ]);
        for gt in &gts {
            assert_eq!(map_divergence(&m, gt).unwrap(), divergence_oracle(&m, gt));
        }
    }
}

#[test]
fn divergence_worked_examples() {
    let gt = grid(&[".#".into(), "#.".into()]);
    let half = grid(&[".?".into(), "?.".into()]);
    assert_eq!(map_divergence(&half, &gt).unwrap(), 0.5);
    let blank = grid(&["??".into(), "??".into()]);
    assert_eq!(map_divergence(&blank, &gt).unwrap(), 1.0);
    // one mismatched label counts for both maps
    let wrong = grid(&["##".into(), "#.".into()]);
    assert_eq!(map_divergence(&wrong, &gt).unwrap(), 0.5);
    assert!(map_divergence(&gt, &blank).is_err());
    assert!(map_divergence(&grid(&["...".into()]), &gt).is_err());
}

#[test]
fn divergence_matches_set_oracle_on_random_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut n = 0;
    while n < 1000 {
        let (w, h) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let gt = grid(&random_rows(&mut rng, w, h, &[3, 5, 2, 1, 1]));
        let m = grid(&random_rows(&mut rng, w, h, &[2, 4, 4, 1, 1]));
        if labeled(&gt).is_empty() {
            continue;
        }
        assert_eq!(map_divergence(&m, &gt).unwrap(), divergence_oracle(&m, &gt));
        assert_eq!(map_divergence(&gt, &gt).unwrap(), 0.0);
        n += 1;
    }
}

fn neighbours8(c: Cell) -> impl Iterator<Item = Cell> {
    (-1..=1)
        .flat_map(move |dy| (-1..=1).map(move |dx| (dx, dy)))
        .filter(|&d| d != (0, 0))
        .map(move |(dx, dy)| c.offset(dx, dy))
}

fn kind_oracle(m: &GridMap, c: Cell) -> FrontierCellKind {
    if m.state(c) != CellState::Unknown {
        return FrontierCellKind::NotFrontier;
    }
    let around: Vec<CellState> = neighbours8(c).filter_map(|n| m.get(n)).collect();
    if around.contains(&CellState::StaticObstacle) {
        FrontierCellKind::NotFrontier
    } else if around.contains(&CellState::DynamicObstacle) {
        FrontierCellKind::Dynamic
    } else if around.contains(&CellState::Free) {
        FrontierCellKind::Simple
    } else {
        FrontierCellKind::NotFrontier
    }
}

/// Frontier components found by walking all free space 4-connected from the
/// robot; a component counts when one of its cells touches that space or a
/// dynamic blob touching it.
fn frontiers_oracle(m: &GridMap, robot: Cell, min_size: usize) -> BTreeSet<Vec<(i64, i64)>> {
    let free = |c: Cell| m.get(c) == Some(CellState::Free);
    let mut reached = HashSet::from([robot]);
    let mut stack = vec![robot];
    while let Some(c) = stack.pop() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = c.offset(dx, dy);
            if free(n) && reached.insert(n) {
                stack.push(n);
            }
        }
    }
    let dynamic = |c: Cell| m.get(c) == Some(CellState::DynamicObstacle);
    let mut blob: HashSet<Cell> = HashSet::new();
    let mut stack: Vec<Cell> = reached
        .iter()
        .flat_map(|&c| neighbours8(c))
        .filter(|&n| dynamic(n))
        .collect();
    while let Some(c) = stack.pop() {
        if blob.insert(c) {
            stack.extend(neighbours8(c).filter(|&n| dynamic(n)));
        }
    }
    let is_frontier = |c: Cell| m.contains(c) && kind_oracle(m, c) != FrontierCellKind::NotFrontier;
    let mut seen = HashSet::new();
    let mut out = BTreeSet::new();
    for c in cells(m).filter(|&c| is_frontier(c)) {
        if !seen.insert(c) {
            continue;
        }
        let mut comp = vec![c];
        let mut k = 0;
        while k < comp.len() {
            for n in neighbours8(comp[k]) {
                if is_frontier(n) && seen.insert(n) {
                    comp.push(n);
                }
            }
            k += 1;
        }
        let touches = comp.iter().any(|&f| {
            neighbours8(f).any(|n| blob.contains(&n) || (reached.contains(&n) && m.contains(n)))
        });
        if touches && comp.len() >= min_size {
            let mut key: Vec<(i64, i64)> = comp.iter().map(|c| (c.y, c.x)).collect();
            key.sort();
            out.insert(key);
        }
    }
    out
}

#[test]
fn cell_kinds_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let (w, h) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
        let m = grid(&random_rows(&mut rng, w, h, &[1, 4, 6, 1, 1]));
        for c in cells(&m) {
            assert_eq!(classify_cell(&m, c).unwrap(), kind_oracle(&m, c));
        }
    }
}

#[test]
fn exhaustive_search_matches_component_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut nonempty = 0;
    for _ in 0..1000 {
        let (w, h) = (rng.gen_range(2..=10), rng.gen_range(2..=10));
        let mut rows = random_rows(&mut rng, w, h, &[1, 6, 6, 1, 0]);
        let (rx, ry) = (rng.gen_range(0..w), rng.gen_range(0..h));
        rows[ry].replace_range(rx..rx + 1, ".");
        let m = grid(&rows);
        let robot = Cell::new(rx as i64, (h - 1 - ry) as i64);
        let min_size = rng.gen_range(1..=3);
        let mut params = SearchParams::new(min_size, 20.0);
        params.exhaustive = true;
        let found = frontier_search(&m, robot, &params, 0.0).unwrap();
        let got: BTreeSet<Vec<(i64, i64)>> = found
            .iter()
            .map(|f| f.cells.iter().map(|c| (c.y, c.x)).collect())
            .collect();
        assert_eq!(got.len(), found.len(), "a component was reported twice");
        assert_eq!(
            got,
            frontiers_oracle(&m, robot, min_size),
            "{rows:?} robot {robot:?}"
        );
        for f in &found {
            let d = f
                .cells
                .iter()
                .filter(|&&c| kind_oracle(&m, c) == FrontierCellKind::Dynamic)
                .count();
            assert_eq!((f.size_simple, f.size_dynamic), (f.size() - d, d));
            assert_eq!(
                f.kind,
                classify_frontier(f.size_simple, f.size_dynamic, 20.0).unwrap()
            );
            assert!(m.state(f.travel_point) == CellState::Free || f.contains(f.travel_point));
        }
        nonempty += usize::from(!found.is_empty());

        // the default search stops early but only ever returns a subset
        let early = frontier_search(&m, robot, &SearchParams::new(min_size, 20.0), 0.0).unwrap();
        for f in &early {
            assert!(found.iter().any(|g| g.cells == f.cells));
        }
        if found.iter().any(|f| f.kind == FrontierType::Simple) {
            assert!(early.iter().any(|f| f.kind == FrontierType::Simple));
        }
    }
    assert!(
        nonempty > 500,
        "oracle exercised only {nonempty} non-trivial maps"
    );
}

/// Integer reading of the type rule: simple when nothing is dynamic,
/// mixed-simple when simple/dynamic reaches thresh, dynamic when it falls
/// below 1/thresh, mixed otherwise.
fn type_oracle(s: u64, d: u64, thresh: u64) -> FrontierType {
    if d == 0 {
        FrontierType::Simple
    } else if s >= thresh * d {
        FrontierType::MixedSimple
    } else if s * thresh < d {
        FrontierType::Dynamic
    } else {
        FrontierType::Mixed
    }
}

#[test]
fn frontier_type_matches_rational_oracle() {
    for thresh in [2u64, 5, 20] {
        for s in 0..=100u64 {
            for d in 0..=100u64 {
                let got = classify_frontier(s as usize, d as usize, thresh as f64);
                if s + d == 0 {
                    assert!(got.is_err());
                } else {
                    assert_eq!(
                        got.unwrap(),
                        type_oracle(s, d, thresh),
                        "s={s} d={d} thresh={thresh}"
                    );
                }
            }
        }
    }
}

fn step_allowed(m: &GridMap, from: Cell, to: Cell, goal: Cell) -> bool {
    let to_goal = to == goal;
    let ok = |c: Cell| match m.get(c) {
        Some(CellState::Free) => true,
        Some(CellState::Unknown) => to_goal,
        _ => false,
    };
    let (dx, dy) = (to.x - from.x, to.y - from.y);
    if dx.abs() > 1 || dy.abs() > 1 || (dx, dy) == (0, 0) || !ok(to) {
        return false;
    }
    dx == 0 || dy == 0 || (ok(from.offset(dx, 0)) && ok(from.offset(0, dy)))
}

fn step_cost(a: Cell, b: Cell) -> f64 {
    if a.x != b.x && a.y != b.y {
        std::f64::consts::SQRT_2
    } else {
        1.0
    }
}

/// Shortest distance by repeated relaxation over every legal step.
fn distance_oracle(m: &GridMap, start: Cell, goal: Cell) -> Option<f64> {
    let all: Vec<Cell> = cells(m).collect();
    let idx = |c: Cell| (c.y as usize) * m.width() + c.x as usize;
    let mut d = vec![f64::INFINITY; all.len()];
    d[idx(start)] = 0.0;
    loop {
        let mut changed = false;
        for &a in &all {
            if d[idx(a)].is_infinite() || (a != start && m.state(a) != CellState::Free) {
                continue;
            }
            for b in neighbours8(a).filter(|&b| m.contains(b) && step_allowed(m, a, b, goal)) {
                let v = d[idx(a)] + step_cost(a, b);
                if v < d[idx(b)] - 1e-12 {
                    d[idx(b)] = v;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let v = d[idx(goal)];
    v.is_finite().then_some(v)
}

#[test]
fn planner_matches_relaxation_oracle() {
    use dynexplore::sim::plan_path;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut routed = 0;
    for _ in 0..1000 {
        let (w, h) = (rng.gen_range(2..=8), rng.gen_range(2..=8));
        let m = grid(&random_rows(&mut rng, w, h, &[2, 8, 2, 1, 0]));
        let start = Cell::new(rng.gen_range(0..w as i64), rng.gen_range(0..h as i64));
        let goal = Cell::new(rng.gen_range(0..w as i64), rng.gen_range(0..h as i64));
        let want = if matches!(m.state(goal), CellState::Free | CellState::Unknown) {
            distance_oracle(&m, start, goal)
        } else {
            None
        };
        match (plan_path(&m, start, goal), want) {
            (None, None) => {}
            (Some(p), Some(d)) => {
                assert_eq!((p[0], *p.last().unwrap()), (start, goal));
                for s in p.windows(2) {
                    assert!(step_allowed(&m, s[0], s[1], goal), "illegal step {s:?}");
                }
                let len: f64 = p.windows(2).map(|s| step_cost(s[0], s[1])).sum();
                assert!((len - d).abs() < 1e-9, "length {len} vs shortest {d}");
                routed += 1;
            }
            (got, want) => panic!("planner {got:?} vs oracle {want:?}"),
        }
    }
    assert!(routed > 300);
}
