use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use rand::Rng as _;
use rayon::prelude::*;

use crate::gridworld::{reset, step, Action, EnvConfig, GridState, ObsCode, Pos, TrajectoryRecord, N_ACTIONS};
use crate::seeding::{self, Rng};

use super::HarnessError;

/// Anything that maps an observation to an action.
pub trait ActPolicy {
    fn act(&mut self, obs: &ObsCode, rng: &mut Rng) -> Action;
}

/// Uniformly random actions.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformPolicy;

impl ActPolicy for UniformPolicy {
    fn act(&mut self, _obs: &ObsCode, rng: &mut Rng) -> Action {
        Action::ALL[rng.gen_range(0..N_ACTIONS)]
    }
}

/// Greedy actions of a trained agent.
pub struct GreedyPolicy<'a>(pub &'a crate::Agent);

impl ActPolicy for GreedyPolicy<'_> {
    fn act(&mut self, obs: &ObsCode, _rng: &mut Rng) -> Action {
        Action::ALL[self.0.greedy_action(obs)]
    }
}

/// Runs `policy` for `steps` steps of one non-episodic lifetime and records
/// every step.
pub fn record_trajectory<P: ActPolicy>(
    env: &EnvConfig,
    policy: &mut P,
    steps: u64,
    policy_seed: u64,
) -> Result<Vec<TrajectoryRecord>, HarnessError> {
    let mut cfg = env.clone();
    cfg.episodic = false;
    let mut state = reset(&cfg)?;
    let mut rng = seeding::stream(policy_seed, "policy");
    let mut obs = crate::gridworld::encode_observation(&state, cfg.task);
    let mut out = Vec::with_capacity(steps as usize);
    for t in 0..steps {
        let action = policy.act(&obs, &mut rng);
        let o = step(&mut state, action, &cfg);
        obs = o.observation;
        out.push(TrajectoryRecord {
            step: t,
            agent_pos: state.agent_pos(),
            action,
            reward: o.reward,
            events: o.events,
            inventory: state.inventory(),
        });
    }
    Ok(out)
}

pub const HITTING_TIME_CAP: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HittingTimeStats {
    pub mean: f64,
    /// Sample standard deviation of the uncensored runs.
    pub std: f64,
    pub censored: usize,
    /// Per-run hitting times; `None` when the run reached the cap.
    pub runs: Vec<Option<u64>>,
}

/// Steps (1-based) a uniform random policy needs to earn its first sparse
/// reward in one non-episodic lifetime, or `None` at the cap.
pub fn first_reward_step(env: &EnvConfig, policy_seed: u64, cap: u64) -> Result<Option<u64>, HarnessError> {
    let mut cfg = env.clone();
    cfg.episodic = false;
    let mut state = reset(&cfg)?;
    let mut rng = seeding::stream(policy_seed, "policy");
    let mut obs = crate::gridworld::encode_observation(&state, cfg.task);
    let mut policy = UniformPolicy;
    for t in 1..=cap {
        let out = step(&mut state, policy.act(&obs, &mut rng), &cfg);
        if out.task_completed {
            return Ok(Some(t));
        }
        obs = out.observation;
    }
    Ok(None)
}

/// Runs `n_runs` independent lifetimes; run `k` uses environment and policy
/// seeds derived from `(seed, k)`.
pub fn hitting_time(env: &EnvConfig, n_runs: usize, cap: u64, seed: u64) -> Result<HittingTimeStats, HarnessError> {
    if n_runs == 0 {
        return Err(HarnessError::Input("hitting_time needs at least one run".into()));
    }
    let runs: Vec<Option<u64>> = (0..n_runs as u64)
        .into_par_iter()
        .map(|k| {
            let cfg = env.with_seed(seeding::derive_indexed(seed, "hitting-env", k));
            first_reward_step(&cfg, seeding::derive_indexed(seed, "hitting-policy", k), cap)
        })
        .collect::<Result<_, _>>()?;
    let done: Vec<f64> = runs.iter().flatten().map(|t| *t as f64).collect();
    let (mean, std) = mean_std(&done);
    Ok(HittingTimeStats { mean, std, censored: runs.len() - done.len(), runs })
}

/// Mean and sample standard deviation; NaN for empty input.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Hash of the observable world: agent position, inventory and every
/// non-wall object with its position.
pub fn world_hash(state: &GridState) -> u64 {
    let mut h = DefaultHasher::new();
    state.agent_pos().hash(&mut h);
    state.inventory().hash(&mut h);
    for (i, k) in state.cells().iter().enumerate() {
        if !matches!(k, crate::gridworld::ObjectKind::Empty | crate::gridworld::ObjectKind::Wall) {
            i.hash(&mut h);
            k.hash(&mut h);
        }
    }
    h.finish()
}

/// Shannon entropy (nats) of the empirical distribution of world hashes
/// over one non-episodic lifetime of `steps` steps under `policy`.
pub fn marginal_state_entropy<P: ActPolicy>(
    env: &EnvConfig,
    policy: &mut P,
    steps: u64,
    policy_seed: u64,
) -> Result<f64, HarnessError> {
    let mut cfg = env.clone();
    cfg.episodic = false;
    let mut state = reset(&cfg)?;
    let mut rng = seeding::stream(policy_seed, "policy");
    let mut obs = crate::gridworld::encode_observation(&state, cfg.task);
    let mut counts: HashMap<u64, u64> = HashMap::new();
    for _ in 0..steps {
        let out = step(&mut state, policy.act(&obs, &mut rng), &cfg);
        obs = out.observation;
        *counts.entry(world_hash(&state)).or_default() += 1;
    }
    Ok(entropy_of_counts(counts.values().copied(), steps))
}

fn entropy_of_counts(counts: impl Iterator<Item = u64>, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    -counts.map(|c| c as f64 / n).filter(|p| *p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// `size x size` occupancy counts, row-major (`[y][x]`).
pub fn visitation_heatmap(trajectory: &[Pos], size: usize) -> Result<Vec<Vec<u64>>, HarnessError> {
    let mut grid = vec![vec![0u64; size]; size];
    for p in trajectory {
        if p.x >= size || p.y >= size {
            return Err(HarnessError::Input(format!("position ({}, {}) outside a {size}x{size} grid", p.x, p.y)));
        }
        grid[p.y][p.x] += 1;
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::Task;

    #[test]
    fn heatmap_counts_every_step() {
        let traj = vec![Pos::new(2, 3); 7];
        let h = visitation_heatmap(&traj, 8).unwrap();
        assert_eq!(h[3][2], 7);
        assert_eq!(h.iter().flatten().sum::<u64>(), 7);
        assert!(visitation_heatmap(&[Pos::new(8, 0)], 8).is_err());
    }

    #[test]
    fn entropy_of_point_mass_is_zero() {
        assert_eq!(entropy_of_counts([10].into_iter(), 10), 0.0);
        let e = entropy_of_counts([5, 5].into_iter(), 10);
        assert!((e - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_world_has_zero_entropy() {
        let mut cfg = EnvConfig::new(Task::Scavenging);
        cfg.grid_size = 2;
        cfg.counts.food = 0;
        cfg.counts.predators = 0;
        // Only the agent moves; a policy that never moves pins the state.
        struct Stay;
        impl ActPolicy for Stay {
            fn act(&mut self, _: &ObsCode, _: &mut Rng) -> Action {
                Action::PickUp
            }
        }
        assert_eq!(marginal_state_entropy(&cfg, &mut Stay, 10_000, 0).unwrap(), 0.0);
    }

    #[test]
    fn zero_runs_is_an_error() {
        assert!(hitting_time(&EnvConfig::new(Task::Factory), 0, 100, 0).is_err());
    }
}
