//! Subtask chains: `k` subtasks of `h` states each, ending in a goal state.
//!
//! In every non-goal state exactly one action (index 0) advances; any other
//! action falls back to the chain start. The goal pays reward 1 and leads back
//! to the start, so a lifetime keeps cycling through the task. A uniform
//! policy therefore needs `k * h` consecutive lucky draws to reach the goal,
//! which is what makes its goal visitation scale like `|A|^(-k h)`.

use crate::scalar::Real;

use super::tabular::{Kernel, PolicyTable, TabularMdp};
use super::visitation::exact_visitation;
use super::MdpError;

/// Builds the `k * h + 1` state chain. State 0 is the start, the last state is the goal.
pub fn build_subtask_chain<T: Real>(k: usize, h: usize, n_actions: usize, gamma: T) -> Result<TabularMdp<T>, MdpError> {
    if k == 0 {
        return Err(MdpError::Invalid("chain needs at least one subtask".into()));
    }
    if n_actions < 2 {
        return Err(MdpError::Invalid("chain needs at least two actions".into()));
    }
    let n = k * h + 1;
    let goal = n - 1;
    let mut probs = vec![T::zero(); n * n_actions * n];
    let mut reward = vec![T::zero(); n * n_actions];
    for s in 0..n {
        for a in 0..n_actions {
            let next = if s == goal {
                0
            } else if a == 0 {
                s + 1
            } else {
                0
            };
            probs[(s * n_actions + a) * n + next] = T::one();
            if s == goal {
                reward[s * n_actions + a] = T::one();
            }
        }
    }
    let mut rho = vec![T::zero(); n];
    rho[0] = T::one();
    TabularMdp::new(Kernel::new(n, n_actions, probs)?, reward, gamma, rho)
}

/// `d*(g) / d_uniform(g)` from the chain start, both from exact linear solves.
pub fn goal_mismatch<T: Real>(mdp: &TabularMdp<T>) -> Result<T, MdpError> {
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    let optimal = PolicyTable::deterministic(m, &vec![0; n])?;
    let uniform = PolicyTable::uniform(n, m);
    let d_star = exact_visitation(mdp, &optimal, mdp.initial_dist())?;
    let d_unif = exact_visitation(mdp, &uniform, mdp.initial_dist())?;
    let g = n - 1;
    if d_unif[g] == T::zero() {
        return Ok(if d_star[g] == T::zero() { T::zero() } else { T::infinity() });
    }
    Ok(d_star[g] / d_unif[g])
}

/// Goal mismatch of the unshaped chain against the summed per-stage mismatches
/// of a `k`-stage curriculum (each stage a single-subtask chain).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainComparison<T> {
    pub unshaped: T,
    pub per_stage: T,
    pub shaped_total: T,
}

pub fn compare_shaped_chain<T: Real>(k: usize, h: usize, n_actions: usize, gamma: T) -> Result<ChainComparison<T>, MdpError> {
    let unshaped = goal_mismatch(&build_subtask_chain(k, h, n_actions, gamma)?)?;
    let per_stage = goal_mismatch(&build_subtask_chain(1, h, n_actions, gamma)?)?;
    let shaped_total = per_stage * T::from_usize(k).expect("k");
    Ok(ChainComparison { unshaped, per_stage, shaped_total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_shape() {
        let m = build_subtask_chain::<f64>(3, 2, 2, 0.9).unwrap();
        assert_eq!(m.n_states(), 7);
        assert_eq!(m.kernel().row(2, 0)[3], 1.0);
        assert_eq!(m.kernel().row(2, 1)[0], 1.0);
        assert_eq!(m.kernel().row(6, 1)[0], 1.0);
        assert_eq!(m.reward(6, 0), 1.0);
        assert!(build_subtask_chain::<f64>(1, 1, 1, 0.9).is_err());
    }

    #[test]
    fn degenerate_chain_has_unit_mismatch() {
        let m = build_subtask_chain::<f64>(1, 0, 2, 0.9).unwrap();
        assert_eq!(m.n_states(), 1);
        assert!((goal_mismatch(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_step_chain_ratio_in_band() {
        let r = goal_mismatch(&build_subtask_chain::<f64>(1, 1, 2, 0.9).unwrap()).unwrap();
        assert!((1.0..=4.0).contains(&r), "{r}");
    }
}
