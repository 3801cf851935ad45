use super::config::{RewardMode, COMPLETION_REWARD};
use super::dynamics::Event;
use super::objects::KindSet;

const DISTANCE_COEF: f64 = 0.01;
const DROP_PENALTY: f64 = 100.0;

/// Reward for one step. `one_time_flags` is updated in OneTime mode so that
/// each resource kind pays its bonus once.
pub fn compute_reward(
    events: &[Event],
    task_completed: bool,
    dist_to_next_subgoal: usize,
    mode: RewardMode,
    one_time_flags: &mut KindSet,
    predator_penalty: f64,
) -> f64 {
    let mut r = if task_completed { COMPLETION_REWARD } else { 0.0 };
    let pickups = events.iter().filter(|e| matches!(e, Event::PickedResource(_))).count() as f64;
    match mode {
        RewardMode::Sparse => {}
        RewardMode::Subgoal => r += pickups,
        RewardMode::Distance => r += pickups - DISTANCE_COEF * dist_to_next_subgoal as f64,
        RewardMode::OneTime => {
            for e in events {
                match e {
                    Event::PickedResource(k) if one_time_flags.insert(*k) => r += 1.0,
                    Event::DroppedResource(_) => r -= DROP_PENALTY,
                    _ => {}
                }
            }
        }
    }
    let caught = events.iter().filter(|e| matches!(e, Event::CaughtByPredator)).count() as f64;
    r - predator_penalty * caught
}
