//! Deterministic tile-physics platformer simulation with an A* completion
//! agent, plus predicted-vs-actual path comparison.
//!
//! The agent walks, jumps up to `max_jump_height` tiles, and falls one tile
//! per step when unsupported. Lateral movement while airborne is limited by
//! an air budget of `max_gap + 1` moves, which makes `max_gap` the widest
//! crossable gap. Hazard tiles block movement. Everything is deterministic:
//! ties in the search are broken rightward, then toward the ground, then by
//! insertion order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use thiserror::Error;

use crate::corpus::{LevelGrid, Tile, LEVEL_HEIGHT};

pub const DEFAULT_NODE_BUDGET: usize = 200_000;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("no standable start cell in column 0")]
    BadStart,
    #[error("cannot report on an empty level list")]
    EmptyLevelList,
}

/// Movement constants and tile classes, kept in one record so simulations
/// are auditable.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsRules {
    /// Maximum rise of a single jump, in tiles.
    pub max_jump_height: usize,
    /// Widest gap crossable at full jump, in tiles.
    pub max_gap: usize,
    pub solid: Vec<char>,
    pub hazard: Vec<char>,
}

impl Default for PhysicsRules {
    fn default() -> Self {
        PhysicsRules {
            max_jump_height: 4,
            max_gap: 4,
            solid: vec!['X', 'S', '?', 'Q', '<', '>', '[', ']', 'B', 'b'],
            hazard: vec!['E'],
        }
    }
}

impl PhysicsRules {
    pub fn is_solid(&self, tile: Tile) -> bool {
        self.solid.contains(&tile.symbol())
    }

    pub fn is_hazard(&self, tile: Tile) -> bool {
        self.hazard.contains(&tile.symbol())
    }

    fn air_budget(&self) -> u8 {
        (self.max_gap + 1) as u8
    }
}

/// A tile-coordinate trajectory; `x` is the column, `y` the row (0 = top).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Path {
    pub points: Vec<(usize, usize)>,
}

impl Path {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Mean row per visited column.
    pub fn mean_y_per_column(&self) -> BTreeMap<usize, f64> {
        let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for &(x, y) in &self.points {
            let entry = sums.entry(x).or_insert((0.0, 0));
            entry.0 += y as f64;
            entry.1 += 1;
        }
        sums.into_iter()
            .map(|(x, (sum, n))| (x, sum / n as f64))
            .collect()
    }
}

/// Result of one simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentResult {
    pub playable: bool,
    /// Complete start-to-last-column trajectory; empty when not playable.
    pub path: Path,
    /// Best-effort trajectory to the rightmost state reached. Equals `path`
    /// when playable.
    pub partial_path: Path,
    pub expanded_nodes: usize,
    /// True when the search stopped on the node budget rather than proving
    /// the last column unreachable.
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Phase {
    Grounded,
    /// Tiles risen so far in the current jump.
    Rising(u8),
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct State {
    x: u16,
    y: u8,
    phase: Phase,
    /// Remaining lateral moves in the current airborne stretch.
    air: u8,
}

struct Sim<'a> {
    level: &'a LevelGrid,
    rules: &'a PhysicsRules,
}

impl<'a> Sim<'a> {
    fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && (x as usize) < self.level.width() && y >= 0 && (y as usize) < LEVEL_HEIGHT
    }

    fn solid(&self, x: i32, y: i32) -> bool {
        self.in_bounds(x, y) && self.rules.is_solid(self.level.get(y as usize, x as usize))
    }

    fn passable(&self, x: i32, y: i32) -> bool {
        self.in_bounds(x, y) && {
            let tile = self.level.get(y as usize, x as usize);
            !self.rules.is_solid(tile) && !self.rules.is_hazard(tile)
        }
    }

    fn supported(&self, x: i32, y: i32) -> bool {
        self.solid(x, y + 1)
    }

    fn successors(&self, s: State, out: &mut Vec<State>) {
        out.clear();
        let (x, y) = (s.x as i32, s.y as i32);
        let air_init = self.rules.air_budget();
        match s.phase {
            Phase::Grounded => {
                // Rightward first; the heap tie-break assumes this order.
                for dx in [1i32, -1] {
                    if self.passable(x + dx, y) {
                        out.push(self.normalize(x + dx, y, false, air_init));
                    }
                }
                if self.passable(x, y - 1) {
                    out.push(State {
                        x: s.x,
                        y: (y - 1) as u8,
                        phase: Phase::Rising(1),
                        air: air_init,
                    });
                }
            }
            Phase::Rising(k) => {
                if (k as usize) < self.rules.max_jump_height {
                    for dx in [0i32, 1, -1] {
                        if dx != 0 && s.air == 0 {
                            continue;
                        }
                        if self.passable(x + dx, y - 1) {
                            out.push(State {
                                x: (x + dx) as u16,
                                y: (y - 1) as u8,
                                phase: Phase::Rising(k + 1),
                                air: s.air - dx.unsigned_abs() as u8,
                            });
                        }
                    }
                }
                self.push_fall_moves(s, out);
            }
            Phase::Falling => self.push_fall_moves(s, out),
        }
        debug_assert!(out
            .iter()
            .all(|n| self.passable(n.x as i32, n.y as i32)));
    }

    fn push_fall_moves(&self, s: State, out: &mut Vec<State>) {
        let (x, y) = (s.x as i32, s.y as i32);
        for dx in [0i32, 1, -1] {
            if dx != 0 && s.air == 0 {
                continue;
            }
            if self.passable(x + dx, y + 1) {
                out.push(self.normalize(
                    x + dx,
                    y + 1,
                    true,
                    s.air - dx.unsigned_abs() as u8,
                ));
            }
        }
    }

    /// Landing check for walk and fall arrivals.
    fn normalize(&self, x: i32, y: i32, falling: bool, air: u8) -> State {
        if self.supported(x, y) {
            State {
                x: x as u16,
                y: y as u8,
                phase: Phase::Grounded,
                air: 0,
            }
        } else {
            State {
                x: x as u16,
                y: y as u8,
                phase: Phase::Falling,
                air: if falling { air } else { self.rules.air_budget() },
            }
        }
    }
}

/// The spawn cell: the lowest passable, supported cell in column 0.
pub fn find_start(level: &LevelGrid, rules: &PhysicsRules) -> Result<(usize, usize), SimError> {
    let sim = Sim { level, rules };
    for y in (0..LEVEL_HEIGHT as i32).rev() {
        if sim.passable(0, y) && sim.supported(0, y) {
            return Ok((0, y as usize));
        }
    }
    Err(SimError::BadStart)
}

#[derive(PartialEq, Eq)]
struct HeapEntry {
    f: usize,
    x: u16,
    y: u8,
    seq: u64,
    state: State,
    g: usize,
}

impl Ord for HeapEntry {
    // BinaryHeap is a max-heap; "greater" means expanded first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .cmp(&self.f)
            .then(self.x.cmp(&other.x))
            .then(self.y.cmp(&other.y))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* search for a traversal from column 0 to the last column.
pub fn simulate_astar(
    level: &LevelGrid,
    rules: &PhysicsRules,
    node_budget: usize,
) -> Result<AgentResult, SimError> {
    let (sx, sy) = find_start(level, rules)?;
    let sim = Sim { level, rules };
    let goal_x = level.width() - 1;
    let start = State {
        x: sx as u16,
        y: sy as u8,
        phase: Phase::Grounded,
        air: 0,
    };

    let mut open = BinaryHeap::new();
    let mut parents: HashMap<State, State> = HashMap::new();
    let mut best_g: HashMap<State, usize> = HashMap::new();
    let mut seq = 0u64;
    best_g.insert(start, 0);
    open.push(HeapEntry {
        f: goal_x - sx,
        x: start.x,
        y: start.y,
        seq,
        state: start,
        g: 0,
    });

    let mut expanded = 0usize;
    let mut budget_exhausted = false;
    // Rightmost state reached, for the best-effort partial path.
    let mut frontier_best = start;
    let mut successors = Vec::with_capacity(6);

    let goal = loop {
        let Some(entry) = open.pop() else {
            break None;
        };
        let state = entry.state;
        if best_g.get(&state) != Some(&entry.g) {
            continue; // stale entry
        }
        if state.x as usize == goal_x {
            break Some(state);
        }
        if expanded >= node_budget {
            budget_exhausted = true;
            break None;
        }
        expanded += 1;
        if state.x > frontier_best.x
            || (state.x == frontier_best.x && state.y > frontier_best.y)
        {
            frontier_best = state;
        }
        sim.successors(state, &mut successors);
        let g = entry.g + 1;
        for &next in &successors {
            if best_g.get(&next).map_or(true, |&old| g < old) {
                best_g.insert(next, g);
                parents.insert(next, state);
                seq += 1;
                open.push(HeapEntry {
                    f: g + (goal_x - next.x as usize),
                    x: next.x,
                    y: next.y,
                    seq,
                    state: next,
                    g,
                });
            }
        }
    };

    let trace = |end: State| {
        let mut points = Vec::new();
        let mut cursor = end;
        loop {
            points.push((cursor.x as usize, cursor.y as usize));
            match parents.get(&cursor) {
                Some(&p) => cursor = p,
                None => break,
            }
        }
        points.reverse();
        points.dedup();
        Path { points }
    };

    Ok(match goal {
        Some(state) => {
            let path = trace(state);
            AgentResult {
                playable: true,
                partial_path: path.clone(),
                path,
                expanded_nodes: expanded,
                budget_exhausted: false,
            }
        }
        None => AgentResult {
            playable: false,
            path: Path::default(),
            partial_path: trace(frontier_best),
            expanded_nodes: expanded,
            budget_exhausted,
        },
    })
}

/// All 'x' tiles ordered by column, then by proximity to the previous point.
pub fn extract_predicted_path(level: &LevelGrid) -> Path {
    let mut points = Vec::new();
    let mut prev_y: Option<usize> = None;
    for col in 0..level.width() {
        let mut rows: Vec<usize> = (0..LEVEL_HEIGHT)
            .filter(|&row| level.get(row, col).is_path())
            .collect();
        if rows.is_empty() {
            continue;
        }
        if let Some(prev) = prev_y {
            rows.sort_by_key(|&row| (row.abs_diff(prev), row));
        }
        prev_y = Some(*rows.last().unwrap());
        points.extend(rows.into_iter().map(|row| (col, row)));
    }
    Path { points }
}

/// Mean absolute row difference over columns both paths visit, using each
/// path's per-column mean row. `None` when the paths share no column.
pub fn path_mae(predicted: &Path, actual: &Path) -> Option<f64> {
    let a = predicted.mean_y_per_column();
    let b = actual.mean_y_per_column();
    let mut total = 0.0;
    let mut shared = 0usize;
    for (x, ya) in &a {
        if let Some(yb) = b.get(x) {
            total += (ya - yb).abs();
            shared += 1;
        }
    }
    (shared > 0).then(|| total / shared as f64)
}

/// One row of a playability report.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub id: String,
    pub playable: bool,
    pub budget_exhausted: bool,
    pub mae: Option<f64>,
    pub expanded_nodes: usize,
}

/// Aggregate playability summary; MAE means follow the playable /
/// not-playable / all split.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayabilityReport {
    pub rows: Vec<LevelReport>,
    pub playable_fraction: f64,
    pub mae_playable: Option<f64>,
    pub mae_not_playable: Option<f64>,
    pub mae_all: Option<f64>,
}

/// Simulate each level `runs_per_level` times. The agent is deterministic,
/// so repeated runs halve the node budget each time; a level counts as
/// playable when any run completes it. MAE always comes from the
/// full-budget run, using the partial path when the level is unplayable.
pub fn playability_report(
    levels: &[(String, LevelGrid)],
    rules: &PhysicsRules,
    runs_per_level: usize,
    node_budget: usize,
) -> Result<PlayabilityReport, SimError> {
    if levels.is_empty() {
        return Err(SimError::EmptyLevelList);
    }
    assert!(runs_per_level >= 1);
    let mut rows = Vec::with_capacity(levels.len());
    for (id, level) in levels {
        let full = simulate_astar(level, rules, node_budget)?;
        let mut playable = full.playable;
        for run in 1..runs_per_level {
            if playable {
                break;
            }
            let budget = node_budget >> run;
            playable |= simulate_astar(level, rules, budget)?.playable;
        }
        let predicted = extract_predicted_path(level);
        let mae = path_mae(&predicted, &full.partial_path);
        rows.push(LevelReport {
            id: id.clone(),
            playable,
            budget_exhausted: full.budget_exhausted,
            mae,
            expanded_nodes: full.expanded_nodes,
        });
    }
    let mean_mae = |keep: &dyn Fn(&LevelReport) -> bool| {
        let values: Vec<f64> = rows
            .iter()
            .filter(|r| keep(r))
            .filter_map(|r| r.mae)
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    };
    let playable_count = rows.iter().filter(|r| r.playable).count();
    Ok(PlayabilityReport {
        playable_fraction: playable_count as f64 / rows.len() as f64,
        mae_playable: mean_mae(&|r: &LevelReport| r.playable),
        mae_not_playable: mean_mae(&|r: &LevelReport| !r.playable),
        mae_all: mean_mae(&|_| true),
        rows,
    })
}

/// Render a level with both trajectories overlaid: agent-only cells as 'A',
/// predicted-only as 'P', overlap as '*'.
pub fn render_with_paths(level: &LevelGrid, predicted: &Path, actual: &Path) -> String {
    let mut out = String::new();
    let pred: std::collections::HashSet<(usize, usize)> =
        predicted.points.iter().copied().collect();
    let act: std::collections::HashSet<(usize, usize)> = actual.points.iter().copied().collect();
    for row in 0..LEVEL_HEIGHT {
        for col in 0..level.width() {
            let here = (col, row);
            let ch = match (pred.contains(&here), act.contains(&here)) {
                (true, true) => '*',
                (true, false) => 'P',
                (false, true) => 'A',
                (false, false) => level.get(row, col).symbol(),
            };
            out.push(ch);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Flat level: two ground rows, open air above.
    pub fn flat(width: usize) -> LevelGrid {
        let mut g = LevelGrid::filled(width, Tile::EMPTY);
        for col in 0..width {
            g.set(12, col, Tile::GROUND);
            g.set(13, col, Tile::GROUND);
        }
        g
    }

    /// Flat level with a full-height wall at `col`.
    pub fn walled(width: usize, col: usize) -> LevelGrid {
        let mut g = flat(width);
        for row in 0..LEVEL_HEIGHT {
            g.set(row, col, Tile::GROUND);
        }
        g
    }

    /// Flat level with the spawn sealed into a 1x1 pocket.
    pub fn enclosed_spawn(width: usize) -> LevelGrid {
        let mut g = flat(width);
        for row in 0..12 {
            g.set(row, 1, Tile::GROUND);
        }
        g.set(10, 0, Tile::GROUND);
        g
    }

    /// Flat level with a gap of `gap` columns starting at `start`.
    pub fn gapped(width: usize, start: usize, gap: usize) -> LevelGrid {
        let mut g = flat(width);
        for col in start..start + gap {
            g.set(12, col, Tile::EMPTY);
            g.set(13, col, Tile::EMPTY);
        }
        g
    }
}
