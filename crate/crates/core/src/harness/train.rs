use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{Checkpoint, DqnAgent, DqnConfig, ReplayBuffer, RndPair, Transition, DEFAULT_RND_SCALE};
use crate::gridworld::{
    encode_observation, reset, reset_at, step, Action, EnvConfig, Event, GridState, ObsCode, EVAL_HORIZON, N_ACTIONS,
};
use crate::seeding;

use super::metrics::{mean_std, visitation_heatmap};
use super::HarnessError;

/// One training configuration, run once per seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub epochs: usize,
    pub steps_per_collect: usize,
    pub grad_steps_per_collect: usize,
    pub epoch_steps: usize,
    pub n_validation: usize,
    pub eval_horizon: usize,
    pub seeds: Vec<u64>,
    pub rnd_enabled: bool,
    pub rnd_scale: f64,
    pub dqn: DqnConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::new(crate::gridworld::Task::Hunting),
            epochs: 40,
            steps_per_collect: 500,
            grad_steps_per_collect: 500,
            epoch_steps: 5000,
            n_validation: 100,
            eval_horizon: EVAL_HORIZON,
            seeds: (0..10).collect(),
            rnd_enabled: false,
            rnd_scale: DEFAULT_RND_SCALE,
            dqn: DqnConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn new(env: EnvConfig) -> Self {
        Self { env, ..Self::default() }
    }

    /// The evaluation MDP: the original task, always unshaped, static and
    /// episodic, whatever the training environment looks like.
    pub fn eval_env(&self) -> EnvConfig {
        let mut e = self.env.original();
        e.horizon = self.eval_horizon;
        e
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.env.validate()?;
        let bad = |m: &str| Err(HarnessError::Input(m.to_string()));
        if self.steps_per_collect == 0 || self.epoch_steps == 0 || !self.epoch_steps.is_multiple_of(self.steps_per_collect) {
            return bad("epoch_steps must be a positive multiple of steps_per_collect");
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required");
        }
        if self.eval_horizon == 0 || self.n_validation == 0 {
            return bad("eval_horizon and n_validation must be positive");
        }
        if self.dqn.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.dqn.learning_rate > 0.0) || !(0.0..=1.0).contains(&self.dqn.gamma) {
            return bad("learning_rate must be positive and gamma in [0, 1]");
        }
        if !(self.rnd_scale >= 0.0) {
            return bad("rnd_scale must be nonnegative");
        }
        let eval = self.eval_env();
        if !eval.is_original() {
            return bad("evaluation environment must be unshaped, static and episodic");
        }
        Ok(())
    }
}

/// The frozen validation tasks: the evaluation MDP reset from seeds `0..n`.
pub fn validation_set(eval_env: &EnvConfig, n: usize) -> Result<Vec<GridState>, HarnessError> {
    (0..n as u64).map(|s| reset(&eval_env.with_seed(s)).map_err(HarnessError::from)).collect()
}

/// Fraction of validation tasks the greedy policy completes within the
/// evaluation horizon. Works on clones; neither the tasks nor any training
/// stream is touched.
pub fn evaluate<P>(policy: &P, validation: &[GridState], eval_env: &EnvConfig) -> f64
where
    P: Fn(&[ObsCode]) -> Vec<usize>,
{
    if validation.is_empty() {
        return 0.0;
    }
    let mut states: Vec<GridState> = validation.to_vec();
    let mut active: Vec<usize> = (0..states.len()).collect();
    let mut solved = 0usize;
    for _ in 0..eval_env.horizon {
        if active.is_empty() {
            break;
        }
        let obs: Vec<ObsCode> = active.iter().map(|&i| encode_observation(&states[i], eval_env.task)).collect();
        let actions = policy(&obs);
        let mut still = Vec::with_capacity(active.len());
        for (&i, a) in active.iter().zip(actions) {
            if step(&mut states[i], Action::ALL[a], eval_env).task_completed {
                solved += 1;
            } else {
                still.push(i);
            }
        }
        active = still;
    }
    solved as f64 / validation.len() as f64
}

/// Per-seed, per-epoch training record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub schema: u32,
    pub seed: u64,
    pub epoch: usize,
    pub env_steps: u64,
    pub grad_steps: u64,
    pub solve_rate: f64,
    /// Environment reward per step during the epoch (bonus excluded).
    pub train_reward_rate: f64,
    pub completions: u64,
    pub epsilon: f64,
    pub loss: f64,
    pub resets: u64,
    pub drop_events: u64,
    pub predator_catches: u64,
    pub rnd_bonus_mean: f64,
}

/// Cross-seed aggregate for one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRecord {
    pub schema: u32,
    pub epoch: usize,
    pub env_steps: u64,
    pub solve_rate_mean: f64,
    pub solve_rate_std: f64,
    pub train_reward_rate: f64,
    pub epsilon: f64,
    pub loss: f64,
}

/// Everything one seed produced.
#[derive(Clone, Debug)]
pub struct SeedArtifacts {
    pub seed: u64,
    pub records: Vec<EpochRecord>,
    /// Agent-cell occupancy per epoch.
    pub heatmaps: Vec<Vec<Vec<u64>>>,
    pub resets: u64,
    pub checkpoint: crate::AgentCheckpoint,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub config: RunConfig,
    pub seeds: Vec<SeedArtifacts>,
    pub aggregate: Vec<AggregateRecord>,
}

impl RunArtifacts {
    pub fn final_solve_rate(&self) -> f64 {
        self.aggregate.last().map_or(0.0, |r| r.solve_rate_mean)
    }
}

pub const METRICS_SCHEMA: u32 = 1;

/// Trains every seed of `cfg` (in parallel on the current rayon pool).
pub fn run_training(cfg: &RunConfig, experiment_seed: u64) -> Result<RunArtifacts, HarnessError> {
    cfg.validate()?;
    let validation = validation_set(&cfg.eval_env(), cfg.n_validation)?;
    let seeds: Vec<SeedArtifacts> = cfg
        .seeds
        .par_iter()
        .map(|&k| train_seed(cfg, experiment_seed, k, &validation))
        .collect::<Result<_, _>>()?;
    let aggregate = (0..cfg.epochs)
        .map(|e| {
            let rows: Vec<&EpochRecord> = seeds.iter().map(|s| &s.records[e]).collect();
            let solve: Vec<f64> = rows.iter().map(|r| r.solve_rate).collect();
            let (mean, std) = mean_std(&solve);
            let avg = |f: fn(&EpochRecord) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64;
            AggregateRecord {
                schema: METRICS_SCHEMA,
                epoch: e,
                env_steps: rows[0].env_steps,
                solve_rate_mean: mean,
                solve_rate_std: std,
                train_reward_rate: avg(|r| r.train_reward_rate),
                epsilon: avg(|r| r.epsilon),
                loss: avg(|r| r.loss),
            }
        })
        .collect();
    Ok(RunArtifacts { config: cfg.clone(), seeds, aggregate })
}

/// Seed of the `k`-th run of an experiment.
pub fn run_seed(experiment_seed: u64, k: u64) -> u64 {
    seeding::derive_indexed(experiment_seed, "run", k)
}

/// One lifetime (non-episodic) or a sequence of episodes (episodic).
pub fn train_seed(
    cfg: &RunConfig,
    experiment_seed: u64,
    k: u64,
    validation: &[GridState],
) -> Result<SeedArtifacts, HarnessError> {
    let root = run_seed(experiment_seed, k);
    let env = cfg.env.with_seed(seeding::derive(root, "env"));
    let eval_env = cfg.eval_env();
    let task = env.task;
    let channels = task.n_channels();
    let mut init_rng = seeding::stream(root, "init");
    let mut explore_rng = seeding::stream(root, "explore");
    let mut replay_rng = seeding::stream(root, "replay");

    let mut agent = DqnAgent::<f32>::new(channels, N_ACTIONS, cfg.dqn.clone(), &mut init_rng)
        .map_err(|e| HarnessError::Input(e.to_string()))?;
    let mut rnd = if cfg.rnd_enabled {
        Some(
            RndPair::<f32>::new(channels, cfg.rnd_scale, cfg.dqn.learning_rate, &mut init_rng)
                .map_err(|e| HarnessError::Input(e.to_string()))?,
        )
    } else {
        None
    };
    let mut buffer = ReplayBuffer::new(cfg.dqn.replay_capacity);

    let mut state = reset(&env)?;
    let mut resets = 1u64;
    let mut episode_len = 0usize;
    let mut obs = encode_observation(&state, task);
    let mut t = 0u64;
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut heatmaps = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut reward_sum = 0.0;
        let mut completions = 0u64;
        let mut drops = 0u64;
        let mut catches = 0u64;
        let mut bonus_sum = 0.0;
        let mut loss_sum = 0.0;
        let mut loss_n = 0u64;
        let mut positions = Vec::with_capacity(cfg.epoch_steps);
        for _ in 0..cfg.epoch_steps / cfg.steps_per_collect {
            for _ in 0..cfg.steps_per_collect {
                let a = agent.act(&obs, t, &mut explore_rng);
                let out = step(&mut state, Action::ALL[a], &env);
                t += 1;
                positions.push(state.agent_pos());
                reward_sum += out.reward;
                completions += u64::from(out.task_completed);
                for e in &out.events {
                    match e {
                        Event::DroppedResource(_) => drops += 1,
                        Event::CaughtByPredator => catches += 1,
                        _ => {}
                    }
                }
                let bonus = rnd.as_ref().map_or(0.0, |r| r.bonus(&out.observation));
                bonus_sum += bonus;
                episode_len += 1;
                let done = env.episodic && (out.task_completed || episode_len >= env.horizon);
                buffer.push(Transition {
                    obs,
                    action: a as u8,
                    reward: (out.reward + bonus) as f32,
                    next_obs: out.observation,
                    terminal: done,
                });
                obs = out.observation;
                if done {
                    let seed = seeding::derive_indexed(root, "episode", resets);
                    state = reset_at(&env, seed, state.shaping_clock())?;
                    resets += 1;
                    episode_len = 0;
                    obs = encode_observation(&state, task);
                }
            }
            for _ in 0..cfg.grad_steps_per_collect {
                let batch = buffer.sample(&mut replay_rng, cfg.dqn.batch_size);
                let loss = agent.update(&batch).map_err(|e| HarnessError::Input(e.to_string()))?;
                loss_sum += loss as f64;
                loss_n += 1;
                if let Some(r) = rnd.as_mut() {
                    let next: Vec<ObsCode> = batch.iter().map(|tr| tr.next_obs).collect();
                    r.train_step(&next).map_err(|e| HarnessError::Input(e.to_string()))?;
                }
            }
        }
        let solve_rate = evaluate(&|o: &[ObsCode]| agent.greedy_actions(o), validation, &eval_env);
        records.push(EpochRecord {
            schema: METRICS_SCHEMA,
            seed: k,
            epoch,
            env_steps: t,
            grad_steps: agent.grad_steps(),
            solve_rate,
            train_reward_rate: reward_sum / cfg.epoch_steps as f64,
            completions,
            epsilon: agent.config().epsilon(t),
            loss: if loss_n > 0 { loss_sum / loss_n as f64 } else { 0.0 },
            resets,
            drop_events: drops,
            predator_catches: catches,
            rnd_bonus_mean: bonus_sum / cfg.epoch_steps as f64,
        });
        heatmaps.push(visitation_heatmap(&positions, env.grid_size)?);
    }
    let checkpoint =
        Checkpoint { task, channels, n_actions: N_ACTIONS, global_step: t, network: agent.online().clone() };
    Ok(SeedArtifacts { seed: k, records, heatmaps, resets, checkpoint })
}
