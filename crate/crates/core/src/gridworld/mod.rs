//! Seeded simulation engine for the grid tasks (hunting, scavenging, salad
//! making, factory and the walled factory), with shaping schedules, the
//! dynamism knob `p`, observation encoding and four reward modes.
//!
//! Cells hold at most one object. The agent stands on top of a cell and acts
//! on its own cell (PickUp, Drop); in the factory it may also take a resource
//! from an orthogonally adjacent worker.

mod config;
mod dynamics;
mod layout;
mod objects;
mod observation;
mod reward;
mod state;

use thiserror::Error;

pub use config::{EnvConfig, ObjectCounts, RewardMode, ShapingSchedule, COMPLETION_REWARD, EVAL_HORIZON, TRAIN_HORIZON};
pub use dynamics::{dist_to_next_subgoal, entity_tick, step, Event, StepOutcome, TrajectoryRecord};
pub use layout::{flood_fill, is_connected, random_wall_layout, LAYOUT_RETRIES, MAX_WALL_FRACTION};
pub use objects::{combine, Action, KindSet, ObjectKind, Task, UnknownTask, N_ACTIONS};
pub use observation::{encode_observation, ObsCode, Observation, VIEW, VIEW_CELLS};
pub use reward::compute_reward;
pub use state::{reset, reset_at, GridState, Pos};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("configuration error: {0}")]
    Config(String),
}
