//! Training loops, evaluation protocol and diagnostic metrics.

mod metrics;
mod train;

use thiserror::Error;

use crate::gridworld::EnvError;

pub use metrics::{
    first_reward_step, hitting_time, record_trajectory, GreedyPolicy, marginal_state_entropy, mean_std, visitation_heatmap, world_hash, ActPolicy,
    HittingTimeStats, UniformPolicy, HITTING_TIME_CAP,
};
pub use train::{
    evaluate, run_seed, run_training, train_seed, validation_set, AggregateRecord, EpochRecord, RunArtifacts, RunConfig,
    SeedArtifacts, METRICS_SCHEMA,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}
