use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::seeding::Rng;

use super::config::EnvConfig;
use super::layout::random_wall_layout;
use super::objects::{KindSet, ObjectKind, Task};
use super::EnvError;

/// Grid coordinate; `x` is the column, `y` the row (growing downward).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: usize,
    pub y: usize,
}

impl Pos {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn manhattan(self, other: Pos) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn chebyshev(self, other: Pos) -> usize {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }
}

/// Full world state of one task instance.
#[derive(Clone, Debug, PartialEq)]
pub struct GridState {
    pub(super) width: usize,
    pub(super) height: usize,
    pub(super) cells: Vec<ObjectKind>,
    /// Ticks until a worker in this cell has its resource again (0 = ready).
    pub(super) cooldown: Vec<u32>,
    pub(super) agent: Pos,
    pub(super) inventory: Option<ObjectKind>,
    pub(super) step_count: u64,
    pub(super) shaping_clock: u64,
    pub(super) one_time_flags: KindSet,
    pub(super) rng: Rng,
    pub(super) next_ingredient: ObjectKind,
}

impl GridState {
    /// Empty world with the agent at `agent`. Used to stage scenarios.
    pub fn blank(width: usize, height: usize, agent: Pos, seed: u64) -> Self {
        assert!(agent.x < width && agent.y < height, "agent outside the grid");
        Self {
            width,
            height,
            cells: vec![ObjectKind::Empty; width * height],
            cooldown: vec![0; width * height],
            agent,
            inventory: None,
            step_count: 0,
            shaping_clock: 0,
            one_time_flags: KindSet::default(),
            rng: Rng::seed_from_u64(seed),
            next_ingredient: ObjectKind::Lettuce,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn agent_pos(&self) -> Pos {
        self.agent
    }

    pub fn inventory(&self) -> Option<ObjectKind> {
        self.inventory
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn shaping_clock(&self) -> u64 {
        self.shaping_clock
    }

    pub fn one_time_flags(&self) -> KindSet {
        self.one_time_flags
    }

    pub fn cell(&self, pos: Pos) -> ObjectKind {
        self.cells[self.index(pos)]
    }

    pub fn cells(&self) -> &[ObjectKind] {
        &self.cells
    }

    /// Overwrites a cell. Panics when `kind` would put a wall under the agent.
    pub fn set_cell(&mut self, pos: Pos, kind: ObjectKind) {
        assert!(!(kind == ObjectKind::Wall && pos == self.agent), "walls cannot cover the agent");
        let i = self.index(pos);
        self.cells[i] = kind;
        self.cooldown[i] = 0;
    }

    pub fn set_inventory(&mut self, item: Option<ObjectKind>) {
        self.inventory = item;
    }

    pub fn set_agent_pos(&mut self, pos: Pos) {
        assert!(self.in_bounds_pos(pos) && self.cell(pos) != ObjectKind::Wall);
        self.agent = pos;
    }

    pub fn set_shaping_clock(&mut self, clock: u64) {
        self.shaping_clock = clock;
    }

    pub fn count(&self, kind: ObjectKind) -> usize {
        self.cells.iter().filter(|c| **c == kind).count()
    }

    /// Positions holding `kind`, in row-major order.
    pub fn positions(&self, kind: ObjectKind) -> Vec<Pos> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == kind)
            .map(|(i, _)| self.pos_of(i))
            .collect()
    }

    /// Whether the worker at `pos` currently has a resource to hand out.
    pub fn worker_ready(&self, pos: Pos) -> bool {
        self.cell(pos).is_worker() && self.cooldown[self.index(pos)] == 0
    }

    pub(super) fn index(&self, pos: Pos) -> usize {
        pos.y * self.width + pos.x
    }

    pub(super) fn pos_of(&self, i: usize) -> Pos {
        Pos::new(i % self.width, i / self.width)
    }

    pub(super) fn in_bounds_pos(&self, pos: Pos) -> bool {
        pos.x < self.width && pos.y < self.height
    }

    pub(super) fn offset(&self, pos: Pos, dx: i32, dy: i32) -> Option<Pos> {
        let x = pos.x as i64 + dx as i64;
        let y = pos.y as i64 + dy as i64;
        (x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height).then(|| Pos::new(x as usize, y as usize))
    }

    /// Empty cell not under the agent.
    pub(super) fn is_free(&self, pos: Pos) -> bool {
        pos != self.agent && self.cell(pos) == ObjectKind::Empty
    }

    /// Places `kind` on a uniformly random free cell, restricted to Manhattan
    /// distance `1..=radius` of the agent when a radius is given and such a
    /// cell exists. Returns the chosen cell.
    pub(super) fn place_random(&mut self, kind: ObjectKind, radius: Option<usize>) -> Option<Pos> {
        let free: Vec<Pos> = (0..self.cells.len()).map(|i| self.pos_of(i)).filter(|p| self.is_free(*p)).collect();
        let near: Vec<Pos> = match radius {
            Some(r) => free.iter().copied().filter(|p| p.manhattan(self.agent) <= r).collect(),
            None => Vec::new(),
        };
        let pool = if near.is_empty() { &free } else { &near };
        let pos = *pool.choose(&mut self.rng)?;
        self.set_cell(pos, kind);
        Some(pos)
    }

    pub(super) fn move_entity(&mut self, from: Pos, to: Pos) {
        let (i, j) = (self.index(from), self.index(to));
        self.cells[j] = self.cells[i];
        self.cooldown[j] = self.cooldown[i];
        self.cells[i] = ObjectKind::Empty;
        self.cooldown[i] = 0;
    }
}

/// Starts a fresh lifetime from `config.seed` with the shaping clock at 0.
pub fn reset(config: &EnvConfig) -> Result<GridState, EnvError> {
    reset_at(config, config.seed, 0)
}

/// Builds a state from `seed` with schedules evaluated at `shaping_clock`.
/// Episodic training uses this to keep the curriculum clock running across episodes.
pub fn reset_at(config: &EnvConfig, seed: u64, shaping_clock: u64) -> Result<GridState, EnvError> {
    config.validate()?;
    let n = config.grid_size;
    let mut rng = Rng::seed_from_u64(seed);
    let cells = if config.task == Task::FactoryWalls {
        random_wall_layout(&mut rng, n, n)
            .ok_or_else(|| EnvError::Config("no connected wall layout after 100 attempts".into()))?
    } else {
        vec![ObjectKind::Empty; n * n]
    };
    let open: Vec<usize> = (0..cells.len()).filter(|i| cells[*i] != ObjectKind::Wall).collect();
    let &agent_idx = open.choose(&mut rng).ok_or_else(|| EnvError::Config("no free cell for the agent".into()))?;

    let mut state = GridState::blank(n, n, Pos::new(agent_idx % n, agent_idx / n), 0);
    state.cells = cells;
    state.rng = rng;
    state.shaping_clock = shaping_clock;

    let counts = config.counts;
    let radius = config.shaping.as_ref().map(|s| s.spawn_dist(shaping_clock));
    let mut plan: Vec<(ObjectKind, usize, Option<usize>)> = Vec::new();
    match config.task {
        Task::Hunting => {
            plan.push((ObjectKind::Axe, counts.axes, None));
            plan.push((ObjectKind::DeerHard, counts.hard_deer, None));
            if let Some(s) = &config.shaping {
                plan.push((ObjectKind::DeerEasy, s.easy_deer_count, None));
            }
        }
        Task::Scavenging => {
            plan.push((ObjectKind::Food, counts.food, radius));
            plan.push((ObjectKind::Predator, counts.predators, None));
        }
        Task::SaladMaking => {
            plan.push((ObjectKind::Lettuce, counts.lettuce, radius));
            plan.push((ObjectKind::Carrot, counts.carrots, radius));
        }
        Task::Factory | Task::FactoryWalls => {
            plan.push((ObjectKind::WorkerWood, counts.wood_workers, None));
            plan.push((ObjectKind::WorkerMetal, counts.metal_workers, None));
        }
    }
    for (kind, count, radius) in plan {
        for _ in 0..count {
            state
                .place_random(kind, radius)
                .ok_or_else(|| EnvError::Config(format!("no free cell left for {kind:?}")))?;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::config::ShapingSchedule;

    #[test]
    fn hunting_counts_with_and_without_shaping() {
        let mut cfg = EnvConfig::new(Task::Hunting);
        let s = reset(&cfg).unwrap();
        assert_eq!((s.count(ObjectKind::Axe), s.count(ObjectKind::DeerHard), s.count(ObjectKind::DeerEasy)), (1, 2, 0));
        cfg.shaping = Some(ShapingSchedule::default());
        let s = reset(&cfg).unwrap();
        assert_eq!(s.count(ObjectKind::DeerEasy), 4);
        assert_eq!(s.count(ObjectKind::DeerHard), 2);
    }

    #[test]
    fn reset_is_a_function_of_the_seed() {
        for task in Task::ALL {
            let cfg = EnvConfig::new(task).with_seed(42);
            assert_eq!(reset(&cfg).unwrap(), reset(&cfg).unwrap());
            assert_ne!(reset(&cfg).unwrap(), reset(&cfg.with_seed(43)).unwrap());
        }
    }

    #[test]
    fn objects_never_under_agent_and_agent_not_on_wall() {
        for seed in 0..50 {
            for task in Task::ALL {
                let s = reset(&EnvConfig::new(task).with_seed(seed)).unwrap();
                assert_eq!(s.cell(s.agent_pos()), ObjectKind::Empty);
            }
        }
    }

    #[test]
    fn shaped_spawn_radius_is_respected() {
        let mut cfg = EnvConfig::new(Task::SaladMaking);
        cfg.shaping = Some(ShapingSchedule::default());
        for seed in 0..50 {
            let s = reset(&cfg.with_seed(seed)).unwrap();
            for kind in [ObjectKind::Lettuce, ObjectKind::Carrot] {
                for p in s.positions(kind) {
                    assert!(p.manhattan(s.agent_pos()) <= 2);
                }
            }
        }
    }

    #[test]
    fn overfull_grid_is_a_config_error() {
        let mut cfg = EnvConfig::new(Task::Factory);
        cfg.grid_size = 2;
        cfg.counts.wood_workers = 4;
        assert!(matches!(reset(&cfg), Err(EnvError::Config(_))));
    }
}
