use serde::{Deserialize, Serialize};

use super::objects::Task;
use super::EnvError;

/// Reward schemes. Every mode pays the sparse completion reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    #[default]
    Sparse,
    /// +1 per resource pickup.
    Subgoal,
    /// -0.01 * distance to the next subgoal every step, +1 per resource pickup.
    Distance,
    /// +1 for the first pickup of each kind, -100 per resource dropped on the floor.
    OneTime,
}

pub const COMPLETION_REWARD: f64 = 100.0;

/// Curriculum knobs. All schedules are linear in the lifetime step counter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapingSchedule {
    /// Hunting: easy deer added at reset.
    pub easy_deer_count: usize,
    /// Scavenging / salad making: spawn radius ramps from min to max.
    pub spawn_dist_min: usize,
    pub spawn_dist_max: usize,
    pub ramp_steps: u64,
    /// Factory: probability that a worker steps toward the agent, decaying to 0.
    pub coop_prob_initial: f64,
    pub decay_steps: u64,
}

impl Default for ShapingSchedule {
    fn default() -> Self {
        Self {
            easy_deer_count: 4,
            spawn_dist_min: 2,
            spawn_dist_max: 14,
            ramp_steps: 100_000,
            coop_prob_initial: 0.9,
            decay_steps: 100_000,
        }
    }
}

impl ShapingSchedule {
    /// Maximum Manhattan distance from the agent at which resources appear.
    pub fn spawn_dist(&self, clock: u64) -> usize {
        let span = self.spawn_dist_max.saturating_sub(self.spawn_dist_min) as f64;
        let frac = if self.ramp_steps == 0 { 1.0 } else { (clock as f64 / self.ramp_steps as f64).min(1.0) };
        self.spawn_dist_min + (span * frac).floor() as usize
    }

    pub fn coop_prob(&self, clock: u64) -> f64 {
        if self.decay_steps == 0 {
            return 0.0;
        }
        self.coop_prob_initial * (1.0 - clock as f64 / self.decay_steps as f64).max(0.0)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.spawn_dist_min < 1 || self.spawn_dist_min > self.spawn_dist_max {
            return Err(EnvError::Config("shaping: need 1 <= spawn_dist_min <= spawn_dist_max".into()));
        }
        if !(0.0..=1.0).contains(&self.coop_prob_initial) {
            return Err(EnvError::Config("shaping: coop_prob_initial outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Initial object counts per task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectCounts {
    pub axes: usize,
    pub hard_deer: usize,
    pub food: usize,
    pub predators: usize,
    pub lettuce: usize,
    pub carrots: usize,
    pub wood_workers: usize,
    pub metal_workers: usize,
}

impl Default for ObjectCounts {
    fn default() -> Self {
        Self { axes: 1, hard_deer: 2, food: 1, predators: 2, lettuce: 1, carrots: 1, wood_workers: 2, metal_workers: 2 }
    }
}

/// Task identity plus every shaping, dynamism, reward and episodicity knob.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub task: Task,
    #[serde(default = "defaults::grid_size")]
    pub grid_size: usize,
    #[serde(default)]
    pub dynamism_p: f64,
    #[serde(default)]
    pub shaping: Option<ShapingSchedule>,
    #[serde(default)]
    pub reward_mode: RewardMode,
    #[serde(default)]
    pub episodic: bool,
    #[serde(default = "defaults::horizon")]
    pub horizon: usize,
    #[serde(default = "defaults::yes")]
    pub nonepisodic_respawn: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub counts: ObjectCounts,
    #[serde(default = "defaults::predator_penalty")]
    pub predator_penalty: f64,
    #[serde(default = "defaults::worker_regen_ticks")]
    pub worker_regen_ticks: u32,
    #[serde(default = "defaults::ingredient_cap")]
    pub ingredient_cap: usize,
}

mod defaults {
    pub fn grid_size() -> usize {
        8
    }
    pub fn horizon() -> usize {
        200
    }
    pub fn yes() -> bool {
        true
    }
    pub fn predator_penalty() -> f64 {
        10.0
    }
    pub fn worker_regen_ticks() -> u32 {
        20
    }
    pub fn ingredient_cap() -> usize {
        3
    }
}

pub const TRAIN_HORIZON: usize = 200;
pub const EVAL_HORIZON: usize = 100;

impl EnvConfig {
    /// Static, unshaped, sparse, non-episodic configuration of `task`.
    pub fn new(task: Task) -> Self {
        Self {
            task,
            grid_size: defaults::grid_size(),
            dynamism_p: 0.0,
            shaping: None,
            reward_mode: RewardMode::Sparse,
            episodic: false,
            horizon: TRAIN_HORIZON,
            nonepisodic_respawn: true,
            seed: 0,
            counts: ObjectCounts::default(),
            predator_penalty: defaults::predator_penalty(),
            worker_regen_ticks: defaults::worker_regen_ticks(),
            ingredient_cap: defaults::ingredient_cap(),
        }
    }

    /// The unmodified task used for evaluation: no shaping, no dynamism, episodic.
    pub fn original(&self) -> Self {
        Self {
            dynamism_p: 0.0,
            shaping: None,
            episodic: true,
            horizon: EVAL_HORIZON,
            reward_mode: RewardMode::Sparse,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn is_original(&self) -> bool {
        self.dynamism_p == 0.0 && self.shaping.is_none() && self.episodic
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if !(0.0..=1.0).contains(&self.dynamism_p) {
            return Err(EnvError::Config(format!("dynamism_p = {} outside [0, 1]", self.dynamism_p)));
        }
        if self.horizon == 0 {
            return Err(EnvError::Config("horizon must be at least 1".into()));
        }
        if self.grid_size < 2 {
            return Err(EnvError::Config("grid_size must be at least 2".into()));
        }
        if let Some(s) = &self.shaping {
            s.validate()?;
        }
        Ok(())
    }
}
