//! Reset-free reinforcement learning laboratory.
//!
//! * [`mdpcore`]: exact small-MDP kit (visitation, mismatch, bounds, dynamism verifier).
//! * [`gridworld`]: the compositional grid tasks with shaping and dynamism knobs.
//! * [`agent`]: double DQN with a two-branch MLP, Adam, replay and RND.
//! * [`harness`]: episodic and non-episodic training, evaluation and diagnostics.
//!
//! Numeric code is generic over [`Real`]/[`Scalar`]; the aliases below fix the
//! precisions the rest of the crate uses.

pub mod agent;
pub mod gridworld;
pub mod harness;
pub mod mdpcore;
pub mod scalar;
pub mod seeding;

pub use scalar::{Real, Scalar};

/// Exact MDP in double precision.
pub type Mdp = mdpcore::TabularMdp<f64>;
/// Policy table in double precision.
pub type Policy64 = mdpcore::PolicyTable<f64>;
/// Q-network in training precision.
pub type QNetwork = agent::TwoBranchNet<f32>;
/// Double-DQN learner in training precision.
pub type Agent = agent::DqnAgent<f32>;
/// RND bonus pair in training precision.
pub type Rnd = agent::RndPair<f32>;
/// Checkpoint of a training-precision network.
pub type AgentCheckpoint = agent::Checkpoint<f32>;
