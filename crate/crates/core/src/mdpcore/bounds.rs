use crate::scalar::Real;

use super::MdpError;

/// Constants of the successive-MDP curriculum bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapingBoundInputs<T> {
    /// Mismatch bound for the first (easiest) environment, `>= 1`.
    pub delta: T,
    /// Drift bound between successive environments, `>= 1`.
    pub drift: T,
    /// Number of environments in the sequence.
    pub k: usize,
    pub epsilon: T,
    pub gamma: T,
    pub n_states: usize,
    pub n_actions: usize,
}

impl<T: Real> ShapingBoundInputs<T> {
    pub fn validate(&self) -> Result<(), MdpError> {
        if !(self.delta >= T::one()) {
            return Err(MdpError::Invalid(format!("delta {} must be >= 1", self.delta)));
        }
        if !(self.drift >= T::one()) {
            return Err(MdpError::Invalid(format!("drift {} must be >= 1", self.drift)));
        }
        if self.k == 0 {
            return Err(MdpError::Invalid("k must be positive".into()));
        }
        check_common(self.gamma, self.n_states, self.n_actions, self.epsilon)
    }
}

fn check_common<T: Real>(gamma: T, n_states: usize, n_actions: usize, epsilon: T) -> Result<(), MdpError> {
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(MdpError::Invalid(format!("gamma {gamma} outside [0, 1)")));
    }
    if !(epsilon > T::zero()) {
        return Err(MdpError::Invalid(format!("epsilon {epsilon} must be positive")));
    }
    if n_states == 0 || n_actions == 0 {
        return Err(MdpError::Invalid("state and action counts must be positive".into()));
    }
    Ok(())
}

/// `64 gamma |S| |A| / ((1 - gamma)^5 epsilon^2)`.
fn prefactor<T: Real>(gamma: T, n_states: usize, n_actions: usize, epsilon: T) -> T {
    let sa = T::from_usize(n_states * n_actions).expect("count");
    T::lit(64.0) * gamma * sa / ((T::one() - gamma).powi(5) * epsilon * epsilon)
}

/// Gradient-ascent iteration threshold `prefactor * mismatch^2`.
///
/// An infinite mismatch yields an infinite threshold, even at `gamma = 0`.
pub fn iteration_bound<T: Real>(
    gamma: T,
    n_states: usize,
    n_actions: usize,
    epsilon: T,
    mismatch: T,
) -> Result<T, MdpError> {
    check_common(gamma, n_states, n_actions, epsilon)?;
    if mismatch.is_nan() || mismatch < T::one() {
        return Err(MdpError::Invalid(format!("mismatch {mismatch} must be >= 1")));
    }
    if mismatch.is_infinite() {
        return Ok(T::infinity());
    }
    Ok(prefactor(gamma, n_states, n_actions, epsilon) * mismatch * mismatch)
}

/// Total iteration complexity of training through the shaped sequence,
/// `prefactor * (delta^2 + k n^2)`.
pub fn shaping_bound<T: Real>(inp: &ShapingBoundInputs<T>) -> Result<T, MdpError> {
    inp.validate()?;
    Ok(prefactor(inp.gamma, inp.n_states, inp.n_actions, inp.epsilon) * curriculum_cost(inp))
}

fn curriculum_cost<T: Real>(inp: &ShapingBoundInputs<T>) -> T {
    let k = T::from_usize(inp.k).expect("k");
    inp.delta * inp.delta + k * inp.drift * inp.drift
}

/// Whether the shaped sequence beats training on the original MDP:
/// `delta^2 + k n^2 <= original_mismatch^2`.
pub fn shaping_beneficial<T: Real>(inp: &ShapingBoundInputs<T>, original_mismatch: T) -> Result<bool, MdpError> {
    inp.validate()?;
    if original_mismatch.is_nan() {
        return Err(MdpError::Invalid("original mismatch is NaN".into()));
    }
    Ok(curriculum_cost(inp) <= original_mismatch * original_mismatch)
}
