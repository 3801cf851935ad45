//! Exact finite-MDP toolkit: discounted visitation, mismatch coefficients,
//! iteration-complexity bounds for curricula, transition entropy and the
//! dynamism-versus-uniformity verifier.
//!
//! Everything here is a pure function of its inputs.

mod bounds;
mod chain;
mod dynamism;
mod tabular;
mod visitation;

use thiserror::Error;

pub use bounds::{iteration_bound, shaping_beneficial, shaping_bound, ShapingBoundInputs};
pub use chain::{build_subtask_chain, compare_shaped_chain, goal_mismatch, ChainComparison};
pub use dynamism::{
    check_dynamism_assumptions, distance_to_uniform, entropy, flatten_row, fuzz_dynamism_theorem,
    random_kernel_pair, row_entropy, verify_dynamism_theorem, DynamismCase, DynamismReport, FuzzTrial,
    UniformDistance,
};
pub use tabular::{validate_distribution, Kernel, PolicyTable, TabularMdp, VisitationVector};
pub use visitation::{exact_visitation, mismatch_coefficient, solve_dense};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("linear solve failed (residual {residual:e})")]
    Numerical { residual: f64 },
}
