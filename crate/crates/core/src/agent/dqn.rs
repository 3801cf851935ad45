use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::gridworld::{ObsCode, VIEW_CELLS};
use crate::seeding::Rng;
use crate::Scalar;

use super::adam::Adam;
use super::net::{Activations, NetShape, TwoBranchNet};
use super::replay::{Transition, DEFAULT_REPLAY_CAPACITY};
use super::AgentError;

/// Learner hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Hard target sync period in gradient steps.
    pub target_sync_every: u64,
    pub replay_capacity: usize,
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: 3e-4,
            batch_size: 256,
            target_sync_every: 1000,
            replay_capacity: DEFAULT_REPLAY_CAPACITY,
            epsilon_decay: 1e-4,
            epsilon_floor: 0.1,
        }
    }
}

impl DqnConfig {
    pub fn epsilon(&self, t: u64) -> f64 {
        (1.0 - self.epsilon_decay * t as f64).max(self.epsilon_floor).min(1.0)
    }
}

/// `max(0.1, 1 - 1e-4 t)`.
pub fn epsilon(t: u64) -> f64 {
    DqnConfig::default().epsilon(t)
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate().skip(1) {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

/// Expands compact observations into dense row-major network inputs.
pub fn encode_batch<'a, T: Scalar>(
    codes: impl IntoIterator<Item = &'a ObsCode>,
    channels: usize,
    grid: &mut Vec<T>,
    inventory: &mut Vec<T>,
) -> usize {
    let (gw, iw) = (VIEW_CELLS * channels, channels + 1);
    grid.clear();
    inventory.clear();
    let mut n = 0;
    for code in codes {
        grid.resize(grid.len() + gw, T::zero());
        inventory.resize(inventory.len() + iw, T::zero());
        let (g0, i0) = (grid.len() - gw, inventory.len() - iw);
        code.write_grid(channels, &mut grid[g0..]);
        code.write_inventory(channels, &mut inventory[i0..]);
        n += 1;
    }
    n
}

/// Mean squared error between `Q(s, a_r)` and fixed targets `y_r` for the
/// first `rows` rows of `acts`' cached pass. Accumulates the gradient into
/// `grads` and returns the loss.
#[allow(clippy::too_many_arguments)]
pub fn td_loss_grad<T: Scalar>(
    net: &TwoBranchNet<T>,
    grid: &[T],
    inventory: &[T],
    acts: &mut Activations<T>,
    q: &[T],
    rows: usize,
    actions: &[usize],
    targets: &[T],
    grads: &mut [T],
) -> Result<T, AgentError> {
    if rows == 0 {
        return Err(AgentError::Input("empty batch".into()));
    }
    let n_out = net.shape().n_out();
    let scale = T::lit(2.0 / rows as f64);
    let mut d_out = vec![T::zero(); rows * n_out];
    let mut loss = T::zero();
    for r in 0..rows {
        let a = actions[r];
        if a >= n_out {
            return Err(AgentError::Input(format!("action {a} out of range")));
        }
        let td = q[r * n_out + a] - targets[r];
        loss = loss + td * td;
        d_out[r * n_out + a] = scale * td;
    }
    net.backward(grid, inventory, acts, rows, &d_out, grads)?;
    Ok(loss / T::lit(rows as f64))
}

/// Copies online parameters into the target when `steps_done` is a
/// positive multiple of `every`. Returns whether it copied.
pub fn sync_target<T: Scalar>(online: &TwoBranchNet<T>, target: &mut TwoBranchNet<T>, steps_done: u64, every: u64) -> bool {
    if every == 0 || steps_done == 0 || !steps_done.is_multiple_of(every) {
        return false;
    }
    target.params_mut().copy_from_slice(online.params());
    true
}

/// Dense minibatch for [`double_dqn_update`].
#[derive(Clone, Debug)]
pub struct DenseBatch<T> {
    pub rows: usize,
    pub grid: Vec<T>,
    pub inventory: Vec<T>,
    pub next_grid: Vec<T>,
    pub next_inventory: Vec<T>,
    pub actions: Vec<usize>,
    pub rewards: Vec<T>,
    pub terminal: Vec<bool>,
}

/// Reusable buffers for updates.
#[derive(Clone, Debug, Default)]
pub struct UpdateScratch<T> {
    online: Activations<T>,
    target: Activations<T>,
    grid: Vec<T>,
    inventory: Vec<T>,
    grads: Vec<T>,
    targets: Vec<T>,
}

/// One double-DQN gradient step:
/// `y = r + gamma (1 - terminal) Q_target(s', argmax_a Q_online(s', a))`.
pub fn double_dqn_update<T: Scalar>(
    online: &mut TwoBranchNet<T>,
    target: &TwoBranchNet<T>,
    adam: &mut Adam<T>,
    batch: &DenseBatch<T>,
    gamma: f64,
    scratch: &mut UpdateScratch<T>,
) -> Result<T, AgentError> {
    let b = batch.rows;
    if b == 0 {
        return Err(AgentError::Input("empty batch".into()));
    }
    let n_out = online.shape().n_out();
    // One pass over [s; s'] gives Q_online for both halves.
    scratch.grid.clear();
    scratch.grid.extend_from_slice(&batch.grid);
    scratch.grid.extend_from_slice(&batch.next_grid);
    scratch.inventory.clear();
    scratch.inventory.extend_from_slice(&batch.inventory);
    scratch.inventory.extend_from_slice(&batch.next_inventory);
    let q_all = online.forward(&scratch.grid, &scratch.inventory, 2 * b, &mut scratch.online)?.to_vec();
    let q_next_t = target.forward(&batch.next_grid, &batch.next_inventory, b, &mut scratch.target)?;
    let g = T::lit(gamma);
    scratch.targets.clear();
    for r in 0..b {
        let next_online = &q_all[(b + r) * n_out..(b + r + 1) * n_out];
        let a_star = argmax(next_online);
        let boot = if batch.terminal[r] { T::zero() } else { g * q_next_t[r * n_out + a_star] };
        scratch.targets.push(batch.rewards[r] + boot);
    }
    scratch.grads.clear();
    scratch.grads.resize(online.n_params(), T::zero());
    let loss = td_loss_grad(
        online,
        &scratch.grid,
        &scratch.inventory,
        &mut scratch.online,
        &q_all[..b * n_out],
        b,
        &batch.actions,
        &scratch.targets,
        &mut scratch.grads,
    )?;
    adam.step(online.params_mut(), &scratch.grads);
    Ok(loss)
}

/// Double-DQN learner over compact grid observations.
#[derive(Clone, Debug)]
pub struct DqnAgent<T> {
    config: DqnConfig,
    channels: usize,
    online: TwoBranchNet<T>,
    target: TwoBranchNet<T>,
    adam: Adam<T>,
    grad_steps: u64,
    scratch: UpdateScratch<T>,
    batch: DenseBatch<T>,
}

impl<T: Scalar> DqnAgent<T> {
    pub fn new(channels: usize, n_actions: usize, config: DqnConfig, rng: &mut Rng) -> Result<Self, AgentError> {
        let online = TwoBranchNet::init(NetShape::two_branch(channels, n_actions), rng)?;
        Ok(Self::from_network(online, channels, config))
    }

    /// Wraps an existing network; the target starts as a copy.
    pub fn from_network(online: TwoBranchNet<T>, channels: usize, config: DqnConfig) -> Self {
        let adam = Adam::new(online.n_params(), config.learning_rate);
        Self {
            config,
            channels,
            target: online.clone(),
            online,
            adam,
            grad_steps: 0,
            scratch: UpdateScratch::default(),
            batch: DenseBatch {
                rows: 0,
                grid: Vec::new(),
                inventory: Vec::new(),
                next_grid: Vec::new(),
                next_inventory: Vec::new(),
                actions: Vec::new(),
                rewards: Vec::new(),
                terminal: Vec::new(),
            },
        }
    }

    pub fn config(&self) -> &DqnConfig {
        &self.config
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn online(&self) -> &TwoBranchNet<T> {
        &self.online
    }

    pub fn target(&self) -> &TwoBranchNet<T> {
        &self.target
    }

    pub fn grad_steps(&self) -> u64 {
        self.grad_steps
    }

    pub fn n_actions(&self) -> usize {
        self.online.shape().n_out()
    }

    pub fn q_values(&self, obs: &ObsCode) -> Vec<T> {
        self.q_values_batch(std::slice::from_ref(obs))
    }

    /// Q-values for several observations, `len x n_actions` row-major.
    pub fn q_values_batch(&self, obs: &[ObsCode]) -> Vec<T> {
        let (mut g, mut v) = (Vec::new(), Vec::new());
        let n = encode_batch(obs, self.channels, &mut g, &mut v);
        let mut acts = Activations::default();
        self.online.forward(&g, &v, n, &mut acts).expect("observation width matches the network").to_vec()
    }

    pub fn greedy_action(&self, obs: &ObsCode) -> usize {
        argmax(&self.q_values(obs))
    }

    pub fn greedy_actions(&self, obs: &[ObsCode]) -> Vec<usize> {
        let q = self.q_values_batch(obs);
        q.chunks(self.n_actions()).map(argmax).collect()
    }

    /// Epsilon-greedy action at global step `t`. Always draws the coin so
    /// the stream advances identically whichever branch is taken.
    pub fn act(&self, obs: &ObsCode, t: u64, rng: &mut Rng) -> usize {
        let explore = rng.gen::<f64>() < self.config.epsilon(t);
        let random = rng.gen_range(0..self.n_actions());
        if explore {
            random
        } else {
            self.greedy_action(obs)
        }
    }

    /// One gradient step on `batch`, then a target sync when due.
    pub fn update(&mut self, batch: &[Transition]) -> Result<T, AgentError> {
        let c = self.channels;
        let b = &mut self.batch;
        b.rows = encode_batch(batch.iter().map(|t| &t.obs), c, &mut b.grid, &mut b.inventory);
        encode_batch(batch.iter().map(|t| &t.next_obs), c, &mut b.next_grid, &mut b.next_inventory);
        b.actions.clear();
        b.actions.extend(batch.iter().map(|t| t.action as usize));
        b.rewards.clear();
        b.rewards.extend(batch.iter().map(|t| T::lit(t.reward as f64)));
        b.terminal.clear();
        b.terminal.extend(batch.iter().map(|t| t.terminal));
        let loss = double_dqn_update(&mut self.online, &self.target, &mut self.adam, &self.batch, self.config.gamma, &mut self.scratch)?;
        self.grad_steps += 1;
        sync_target(&self.online, &mut self.target, self.grad_steps, self.config.target_sync_every);
        Ok(loss)
    }

    /// Replaces the online network (e.g. from a checkpoint) and re-syncs the target.
    pub fn load_online(&mut self, net: TwoBranchNet<T>) -> Result<(), AgentError> {
        if net.shape() != self.online.shape() {
            return Err(AgentError::Shape("checkpoint network shape differs".into()));
        }
        self.target = net.clone();
        self.online = net;
        Ok(())
    }
}
