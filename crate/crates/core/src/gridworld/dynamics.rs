use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seeding::Rng;

use super::config::EnvConfig;
use super::objects::{combine, Action, ObjectKind, Task};
use super::observation::{encode_observation, ObsCode};
use super::reward::compute_reward;
use super::state::{GridState, Pos};

/// Interaction events emitted during one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Event {
    PickedResource(ObjectKind),
    /// Inventory placed on an empty cell.
    DroppedResource(ObjectKind),
    /// Recipe product created by a drop.
    Combined(ObjectKind),
    CaughtByPredator,
    /// A deer was caught or food was eaten.
    Consumed(ObjectKind),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    /// Compact observation of the post-step state; see [`ObsCode::expand`].
    pub observation: ObsCode,
    pub reward: f64,
    pub task_completed: bool,
    pub events: Vec<Event>,
    pub dist_to_next_subgoal: usize,
}

/// One line of a trajectory dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: u64,
    pub agent_pos: Pos,
    pub action: Action,
    pub reward: f64,
    pub events: Vec<Event>,
    pub inventory: Option<ObjectKind>,
}

const ORTHOGONAL: [(i32, i32); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];
// Flee candidates are scanned x-axis first so ties prefer horizontal steps.
const X_FIRST: [(i32, i32); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

fn chance(rng: &mut Rng, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.gen_bool(p)
    }
}

/// Advances the world by one agent action.
pub fn step(state: &mut GridState, action: Action, config: &EnvConfig) -> StepOutcome {
    let mut events = Vec::new();
    let task_completed = agent_phase(state, action, config, &mut events);
    tick(state, config, &mut events);
    let dist = dist_to_next_subgoal(state, config.task);
    let reward = compute_reward(
        &events,
        task_completed,
        dist,
        config.reward_mode,
        &mut state.one_time_flags,
        config.predator_penalty,
    );
    if task_completed && !config.episodic && config.nonepisodic_respawn {
        respawn(state, config);
    }
    state.step_count += 1;
    state.shaping_clock += 1;
    StepOutcome {
        observation: encode_observation(state, config.task),
        reward,
        task_completed,
        events,
        dist_to_next_subgoal: dist,
    }
}

/// Runs only the world phase (entity moves, regeneration, ingredient growth).
pub fn entity_tick(state: &mut GridState, config: &EnvConfig) -> Vec<Event> {
    let mut events = Vec::new();
    tick(state, config, &mut events);
    events
}

fn agent_phase(state: &mut GridState, action: Action, config: &EnvConfig, events: &mut Vec<Event>) -> bool {
    let task = config.task;
    let here = state.agent;
    match action {
        Action::Up | Action::Down | Action::Left | Action::Right => {
            let (dx, dy) = action.delta().expect("movement action");
            let Some(target) = state.offset(here, dx, dy) else {
                return false;
            };
            let kind = state.cell(target);
            match kind {
                ObjectKind::Wall => false,
                k if k.is_deer() => {
                    if state.inventory != Some(ObjectKind::Axe) {
                        return false;
                    }
                    state.set_cell(target, ObjectKind::Empty);
                    state.inventory = None;
                    state.agent = target;
                    events.push(Event::Consumed(k));
                    task == Task::Hunting
                }
                ObjectKind::Food => {
                    state.set_cell(target, ObjectKind::Empty);
                    state.agent = target;
                    events.push(Event::Consumed(ObjectKind::Food));
                    task == Task::Scavenging
                }
                ObjectKind::Predator => {
                    state.agent = target;
                    events.push(Event::CaughtByPredator);
                    relocate_predator(state, target);
                    false
                }
                _ => {
                    state.agent = target;
                    false
                }
            }
        }
        Action::PickUp => {
            if state.inventory.is_some() {
                return false;
            }
            let kind = state.cell(here);
            if kind.is_pickable() {
                state.set_cell(here, ObjectKind::Empty);
                state.inventory = Some(kind);
                events.push(Event::PickedResource(kind));
                return false;
            }
            if matches!(task, Task::Factory | Task::FactoryWalls) {
                let spots = std::iter::once(here).chain(ORTHOGONAL.iter().filter_map(|(dx, dy)| state.offset(here, *dx, *dy)));
                let ready: Vec<Pos> = spots.filter(|p| state.worker_ready(*p)).collect();
                if let Some(&p) = ready.first() {
                    let resource = state.cell(p).worker_resource().expect("worker");
                    let i = state.index(p);
                    state.cooldown[i] = config.worker_regen_ticks;
                    state.inventory = Some(resource);
                    events.push(Event::PickedResource(resource));
                }
            }
            false
        }
        Action::Drop => {
            let Some(item) = state.inventory else {
                return false;
            };
            let on_cell = state.cell(here);
            if on_cell == ObjectKind::Empty {
                state.set_cell(here, item);
                state.inventory = None;
                events.push(Event::DroppedResource(item));
                return false;
            }
            let Some(product) = combine(item, on_cell) else {
                return false;
            };
            state.inventory = None;
            events.push(Event::Combined(product));
            let completes = match task {
                Task::SaladMaking => product == ObjectKind::Salad,
                Task::Factory | Task::FactoryWalls => product == ObjectKind::Axe,
                _ => false,
            };
            // A completing product is consumed on the spot.
            state.set_cell(here, if completes { ObjectKind::Empty } else { product });
            completes
        }
    }
}

fn tick(state: &mut GridState, config: &EnvConfig, events: &mut Vec<Event>) {
    let p = config.dynamism_p;
    let coop = config.shaping.as_ref().map_or(0.0, |s| s.coop_prob(state.shaping_clock));
    let movers: Vec<(Pos, ObjectKind)> = state
        .cells
        .iter()
        .enumerate()
        .filter(|(_, k)| k.is_mobile())
        .map(|(i, k)| (state.pos_of(i), *k))
        .collect();
    for (pos, kind) in movers {
        if state.cell(pos) != kind {
            continue;
        }
        match kind {
            ObjectKind::DeerHard => {
                if chance(&mut state.rng, p) {
                    random_step(state, pos, false);
                } else if pos.chebyshev(state.agent) <= 2 {
                    flee(state, pos);
                }
            }
            ObjectKind::DeerEasy => {
                approach(state, pos, false);
            }
            ObjectKind::Predator => {
                let to = if chance(&mut state.rng, p) { random_step(state, pos, true) } else { approach(state, pos, true) };
                if to == state.agent {
                    events.push(Event::CaughtByPredator);
                    relocate_predator(state, to);
                }
            }
            ObjectKind::WorkerWood | ObjectKind::WorkerMetal => {
                if chance(&mut state.rng, coop) {
                    approach(state, pos, false);
                } else if chance(&mut state.rng, p) {
                    random_step(state, pos, false);
                }
            }
            _ => unreachable!("only mobile kinds are scheduled"),
        }
    }
    for c in state.cooldown.iter_mut() {
        *c = c.saturating_sub(1);
    }
    if config.task == Task::SaladMaking && chance(&mut state.rng, p) {
        let kind = state.next_ingredient;
        state.next_ingredient = if kind == ObjectKind::Lettuce { ObjectKind::Carrot } else { ObjectKind::Lettuce };
        if state.count(kind) < config.ingredient_cap {
            let radius = config.shaping.as_ref().map(|s| s.spawn_dist(state.shaping_clock));
            state.place_random(kind, radius);
        }
    }
}

fn enterable(state: &GridState, to: Pos, onto_agent: bool) -> bool {
    state.is_free(to) || (onto_agent && to == state.agent && state.cell(to) == ObjectKind::Empty)
}

fn random_step(state: &mut GridState, pos: Pos, onto_agent: bool) -> Pos {
    let options: Vec<Pos> = ORTHOGONAL
        .iter()
        .filter_map(|(dx, dy)| state.offset(pos, *dx, *dy))
        .filter(|t| enterable(state, *t, onto_agent))
        .collect();
    match options.choose(&mut state.rng) {
        Some(&to) => {
            state.move_entity(pos, to);
            to
        }
        None => pos,
    }
}

/// One step reducing the Manhattan distance to the agent, x-axis first.
fn approach(state: &mut GridState, pos: Pos, onto_agent: bool) -> Pos {
    let agent = state.agent;
    let sx = (agent.x as i64 - pos.x as i64).signum() as i32;
    let sy = (agent.y as i64 - pos.y as i64).signum() as i32;
    for (dx, dy) in [(sx, 0), (0, sy)] {
        if (dx, dy) == (0, 0) {
            continue;
        }
        if let Some(to) = state.offset(pos, dx, dy) {
            if enterable(state, to, onto_agent) {
                state.move_entity(pos, to);
                return to;
            }
        }
    }
    pos
}

/// One step increasing the Chebyshev distance to the agent, x-axis first.
/// A deer pinned against a wall cannot slide along it, so a pursuer can
/// corner it.
fn flee(state: &mut GridState, pos: Pos) -> Pos {
    let agent = state.agent;
    let mut best = (pos.chebyshev(agent), pos);
    for (dx, dy) in X_FIRST {
        if let Some(to) = state.offset(pos, dx, dy) {
            let d = to.chebyshev(agent);
            if d > best.0 && state.is_free(to) {
                best = (d, to);
            }
        }
    }
    if best.1 != pos {
        state.move_entity(pos, best.1);
    }
    best.1
}

/// Moves a predator that reached the agent to a random free cell at least
/// three steps away (any free cell if none is that far).
fn relocate_predator(state: &mut GridState, at: Pos) {
    let agent = state.agent;
    let free: Vec<Pos> = (0..state.cells.len()).map(|i| state.pos_of(i)).filter(|p| state.is_free(*p)).collect();
    let far: Vec<Pos> = free.iter().copied().filter(|p| p.manhattan(agent) >= 3).collect();
    let pool = if far.is_empty() { &free } else { &far };
    let dest = pool.choose(&mut state.rng).copied();
    state.set_cell(at, ObjectKind::Empty);
    if let Some(d) = dest {
        state.set_cell(d, ObjectKind::Predator);
    }
}

fn respawn(state: &mut GridState, config: &EnvConfig) {
    let counts = config.counts;
    let radius = config.shaping.as_ref().map(|s| s.spawn_dist(state.shaping_clock));
    let held = |s: &GridState, k: ObjectKind| s.count(k) + usize::from(s.inventory == Some(k));
    let plan: &[(ObjectKind, usize, Option<usize>)] = match config.task {
        Task::Hunting => &[(ObjectKind::DeerHard, counts.hard_deer, None), (ObjectKind::Axe, counts.axes, None)],
        Task::Scavenging => &[(ObjectKind::Food, counts.food, radius)],
        Task::SaladMaking => &[(ObjectKind::Lettuce, counts.lettuce, radius), (ObjectKind::Carrot, counts.carrots, radius)],
        Task::Factory | Task::FactoryWalls => &[],
    };
    for &(kind, target, radius) in plan {
        while held(state, kind) < target {
            if state.place_random(kind, radius).is_none() {
                break;
            }
        }
    }
}

/// Manhattan distance to the nearest object the task needs next, or
/// `width + height` when nothing suitable is on the grid. A carried resource
/// that has no partner on the floor makes the agent's own cell the subgoal.
pub fn dist_to_next_subgoal(state: &GridState, task: Task) -> usize {
    use ObjectKind::*;
    let targets: Vec<ObjectKind> = match (task, state.inventory) {
        (Task::Hunting, Some(Axe)) => vec![DeerHard, DeerEasy],
        (Task::Hunting, _) => vec![Axe],
        (Task::Scavenging, _) => vec![Food],
        (Task::SaladMaking, Some(Lettuce)) => vec![Carrot],
        (Task::SaladMaking, Some(Carrot)) => vec![Lettuce],
        (Task::SaladMaking, _) => vec![Lettuce, Carrot],
        (Task::Factory | Task::FactoryWalls, Some(item)) => {
            let partner = if item == Wood { Metal } else { Wood };
            if state.count(partner) == 0 {
                return 0;
            }
            vec![partner]
        }
        (Task::Factory | Task::FactoryWalls, None) => match (state.count(Wood) > 0, state.count(Metal) > 0) {
            (true, false) => vec![Metal, WorkerMetal],
            (false, true) => vec![Wood, WorkerWood],
            _ => vec![Wood, Metal, WorkerWood, WorkerMetal],
        },
    };
    let agent = state.agent;
    state
        .cells
        .iter()
        .enumerate()
        .filter(|(i, k)| targets.contains(k) && (!k.is_worker() || state.cooldown[*i] == 0))
        .map(|(i, _)| state.pos_of(i).manhattan(agent))
        .min()
        .unwrap_or(state.width + state.height)
}
