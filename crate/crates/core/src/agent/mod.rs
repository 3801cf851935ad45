//! Double DQN with a two-branch MLP (grid view and inventory), manual
//! backpropagation, Adam, a FIFO replay buffer, epsilon-greedy exploration
//! and an optional random-network-distillation bonus.
//!
//! The Q-head is linear: bootstrapped action values must be unbounded.

mod adam;
pub mod checkpoint;
mod dqn;
mod net;
mod replay;
mod rnd;

use thiserror::Error;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, CheckpointError};
pub use dqn::{
    argmax, double_dqn_update, encode_batch, epsilon, sync_target, td_loss_grad, DenseBatch, DqnAgent, DqnConfig,
    UpdateScratch,
};
pub use net::{Activations, NetShape, TwoBranchNet};
pub use replay::{ReplayBuffer, Transition, DEFAULT_REPLAY_CAPACITY};
pub use rnd::{RndPair, DEFAULT_RND_SCALE, RND_OUT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Input(String),
}
