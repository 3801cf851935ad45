//! Experiment files.
//!
//! An experiment is one TOML document. The top level holds `name`,
//! `output_dir`, `parallelism`, `seed` and an optional `[[variants]]` array;
//! every other top-level key is a run setting shared by all variants. Each
//! variant is deep-merged over those shared settings.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};
use ecorl::agent::DqnConfig;
use ecorl::gridworld::{EnvConfig, ObjectCounts, RewardMode, ShapingSchedule, Task};
use ecorl::harness::RunConfig;
use serde::{Deserialize, Deserializer, Serialize};
use toml::{Table, Value};

const EXPERIMENT_KEYS: [&str; 5] = ["name", "output_dir", "parallelism", "seed", "variants"];

/// `shaping = true`, `shaping = false`, or a `[shaping]` table with a custom
/// schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Shaping {
    Enabled(bool),
    Schedule(ShapingSchedule),
}

impl Default for Shaping {
    fn default() -> Self {
        Shaping::Enabled(false)
    }
}

impl Shaping {
    pub fn schedule(&self) -> Option<ShapingSchedule> {
        match self {
            Shaping::Enabled(false) => None,
            Shaping::Enabled(true) => Some(ShapingSchedule::default()),
            Shaping::Schedule(s) => Some(*s),
        }
    }
}

/// Every knob of one training run, flat.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    #[serde(deserialize_with = "loose_task")]
    pub task: Task,
    #[serde(default = "d::grid_size")]
    pub grid_size: usize,
    #[serde(default)]
    pub dynamism_p: f64,
    #[serde(default)]
    pub shaping: Shaping,
    #[serde(default)]
    pub reward_mode: RewardMode,
    #[serde(default)]
    pub episodic: bool,
    #[serde(default = "d::horizon")]
    pub horizon: usize,
    #[serde(default = "d::yes")]
    pub nonepisodic_respawn: bool,
    #[serde(default = "d::predator_penalty")]
    pub predator_penalty: f64,
    #[serde(default = "d::worker_regen_ticks")]
    pub worker_regen_ticks: u32,
    #[serde(default = "d::ingredient_cap")]
    pub ingredient_cap: usize,
    #[serde(default)]
    pub counts: ObjectCounts,

    #[serde(default = "d::epochs")]
    pub epochs: usize,
    #[serde(default = "d::five_hundred")]
    pub steps_per_collect: usize,
    #[serde(default = "d::five_hundred")]
    pub grad_steps_per_collect: usize,
    #[serde(default = "d::epoch_steps")]
    pub epoch_steps: usize,
    #[serde(default = "d::hundred")]
    pub n_validation: usize,
    #[serde(default = "d::hundred")]
    pub eval_horizon: usize,
    #[serde(default = "d::seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub rnd_enabled: bool,
    #[serde(default = "d::rnd_scale")]
    pub rnd_scale: f64,

    #[serde(default = "d::gamma")]
    pub gamma: f64,
    #[serde(default = "d::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "d::batch_size")]
    pub batch_size: usize,
    #[serde(default = "d::target_sync_every")]
    pub target_sync_every: u64,
    #[serde(default = "d::replay_capacity")]
    pub replay_capacity: usize,
    #[serde(default = "d::epsilon_decay")]
    pub epsilon_decay: f64,
    #[serde(default = "d::epsilon_floor")]
    pub epsilon_floor: f64,
}

mod d {
    use ecorl::agent::DqnConfig;
    use ecorl::gridworld::{EnvConfig, Task};
    use ecorl::harness::RunConfig;

    fn env() -> EnvConfig {
        EnvConfig::new(Task::Hunting)
    }
    fn run() -> RunConfig {
        RunConfig::default()
    }
    fn dqn() -> DqnConfig {
        DqnConfig::default()
    }
    pub fn grid_size() -> usize {
        env().grid_size
    }
    pub fn horizon() -> usize {
        env().horizon
    }
    pub fn yes() -> bool {
        true
    }
    pub fn predator_penalty() -> f64 {
        env().predator_penalty
    }
    pub fn worker_regen_ticks() -> u32 {
        env().worker_regen_ticks
    }
    pub fn ingredient_cap() -> usize {
        env().ingredient_cap
    }
    pub fn epochs() -> usize {
        run().epochs
    }
    pub fn five_hundred() -> usize {
        500
    }
    pub fn epoch_steps() -> usize {
        run().epoch_steps
    }
    pub fn hundred() -> usize {
        100
    }
    pub fn seeds() -> Vec<u64> {
        run().seeds
    }
    pub fn rnd_scale() -> f64 {
        run().rnd_scale
    }
    pub fn gamma() -> f64 {
        dqn().gamma
    }
    pub fn learning_rate() -> f64 {
        dqn().learning_rate
    }
    pub fn batch_size() -> usize {
        dqn().batch_size
    }
    pub fn target_sync_every() -> u64 {
        dqn().target_sync_every
    }
    pub fn replay_capacity() -> usize {
        dqn().replay_capacity
    }
    pub fn epsilon_decay() -> f64 {
        dqn().epsilon_decay
    }
    pub fn epsilon_floor() -> f64 {
        dqn().epsilon_floor
    }
}

fn loose_task<'de, D: Deserializer<'de>>(de: D) -> Result<Task, D::Error> {
    let s = String::deserialize(de)?;
    Task::from_str(&s).map_err(serde::de::Error::custom)
}

impl RunSettings {
    pub fn new(task: Task) -> Self {
        let mut t = Table::new();
        t.insert("task".into(), Value::String(task.name().into()));
        t.try_into().expect("defaults deserialize")
    }

    pub fn env(&self) -> EnvConfig {
        EnvConfig {
            task: self.task,
            grid_size: self.grid_size,
            dynamism_p: self.dynamism_p,
            shaping: self.shaping.schedule(),
            reward_mode: self.reward_mode,
            episodic: self.episodic,
            horizon: self.horizon,
            nonepisodic_respawn: self.nonepisodic_respawn,
            seed: 0,
            counts: self.counts,
            predator_penalty: self.predator_penalty,
            worker_regen_ticks: self.worker_regen_ticks,
            ingredient_cap: self.ingredient_cap,
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            env: self.env(),
            epochs: self.epochs,
            steps_per_collect: self.steps_per_collect,
            grad_steps_per_collect: self.grad_steps_per_collect,
            epoch_steps: self.epoch_steps,
            n_validation: self.n_validation,
            eval_horizon: self.eval_horizon,
            seeds: self.seeds.clone(),
            rnd_enabled: self.rnd_enabled,
            rnd_scale: self.rnd_scale,
            dqn: DqnConfig {
                gamma: self.gamma,
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
                target_sync_every: self.target_sync_every,
                replay_capacity: self.replay_capacity,
                epsilon_decay: self.epsilon_decay,
                epsilon_floor: self.epsilon_floor,
            },
        }
    }

    /// A readable method label such as `nonepisodic-dynamic0.1-sparse`.
    pub fn method_label(&self) -> String {
        let mut parts = vec![if self.episodic { "episodic" } else { "nonepisodic" }.to_string()];
        parts.push(if self.dynamism_p > 0.0 { format!("dynamic{}", self.dynamism_p) } else { "static".into() });
        parts.push(reward_name(self.reward_mode).into());
        if self.shaping.schedule().is_some() {
            parts.push("shaped".into());
        }
        if self.rnd_enabled {
            parts.push("rnd".into());
        }
        parts.join("-")
    }

    fn to_table(&self) -> Table {
        Table::try_from(self).expect("settings serialize to a table")
    }
}

fn reward_name(m: RewardMode) -> &'static str {
    match m {
        RewardMode::Sparse => "sparse",
        RewardMode::Subgoal => "subgoal",
        RewardMode::Distance => "distance",
        RewardMode::OneTime => "one_time",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variant {
    pub name: String,
    pub settings: RunSettings,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub name: String,
    pub output_dir: PathBuf,
    pub parallelism: usize,
    pub seed: u64,
    pub base: RunSettings,
    pub variants: Vec<Variant>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()).into())
}

/// Recursively overlays `over` on `base`. Tables merge key by key; anything
/// else replaces.
pub fn deep_merge(base: &mut Table, over: &Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => deep_merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

fn settings_from(table: Table, context: &str) -> Result<RunSettings> {
    let s: RunSettings = table.try_into().map_err(|e: toml::de::Error| ConfigError(format!("{context}: {e}")))?;
    s.run_config().validate().map_err(|e| ConfigError(format!("{context}: {e}")))?;
    Ok(s)
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut table: Table = text.parse().map_err(|e: toml::de::Error| ConfigError(e.to_string()))?;
        let name = match table.remove("name") {
            Some(Value::String(s)) => s,
            Some(_) => return invalid("name must be a string"),
            None => "experiment".to_string(),
        };
        let output_dir = match table.remove("output_dir") {
            Some(Value::String(s)) => PathBuf::from(s),
            Some(_) => return invalid("output_dir must be a string"),
            None => PathBuf::from("runs"),
        };
        let parallelism = match table.remove("parallelism") {
            Some(Value::Integer(n)) if n >= 1 => n as usize,
            Some(_) => return invalid("parallelism must be a positive integer"),
            None => 1,
        };
        let seed = match table.remove("seed") {
            Some(Value::Integer(n)) if n >= 0 => n as u64,
            Some(_) => return invalid("seed must be a nonnegative integer"),
            None => 0,
        };
        let raw_variants = match table.remove("variants") {
            Some(Value::Array(a)) => a,
            Some(_) => return invalid("variants must be an array of tables"),
            None => Vec::new(),
        };
        let base = settings_from(table.clone(), "base settings")?;

        let mut variants = Vec::new();
        for (i, v) in raw_variants.into_iter().enumerate() {
            let Value::Table(mut vt) = v else {
                return invalid(format!("variant {i} is not a table"));
            };
            for k in EXPERIMENT_KEYS {
                if k != "name" && vt.contains_key(k) {
                    return invalid(format!("variant {i}: `{k}` can only be set at the top level"));
                }
            }
            let vname = match vt.remove("name") {
                Some(Value::String(s)) => Some(s),
                Some(_) => return invalid(format!("variant {i}: name must be a string")),
                None => None,
            };
            let mut merged = table.clone();
            deep_merge(&mut merged, &vt);
            let settings = settings_from(merged, &format!("variant {}", vname.as_deref().unwrap_or(&i.to_string())))?;
            let name = vname.unwrap_or_else(|| settings.method_label());
            variants.push(Variant { name, settings });
        }
        if variants.is_empty() {
            variants.push(Variant { name: base.method_label(), settings: base.clone() });
        }
        let exp = Experiment { name, output_dir, parallelism, seed, base, variants };
        exp.validate()?;
        Ok(exp)
    }

    pub fn validate(&self) -> Result<()> {
        let path_safe = |s: &str| !s.is_empty() && !s.contains(['/', '\\']) && s != "." && s != "..";
        if !path_safe(&self.name) {
            return invalid(format!("experiment name `{}` is not a valid directory name", self.name));
        }
        let mut seen = HashSet::new();
        for v in &self.variants {
            if !path_safe(&v.name) {
                return invalid(format!("variant name `{}` is not a valid directory name", v.name));
            }
            if !seen.insert(v.name.as_str()) {
                return invalid(format!("duplicate variant name `{}`", v.name));
            }
            v.settings.run_config().validate().map_err(|e| ConfigError(format!("variant {}: {e}", v.name)))?;
        }
        Ok(())
    }

    /// Fully resolved TOML: every variant spelled out in full.
    pub fn to_toml(&self) -> String {
        let mut t = self.base.to_table();
        t.insert("name".into(), Value::String(self.name.clone()));
        t.insert("output_dir".into(), Value::String(self.output_dir.display().to_string()));
        t.insert("parallelism".into(), Value::Integer(self.parallelism as i64));
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        let vs = self
            .variants
            .iter()
            .map(|v| {
                let mut vt = v.settings.to_table();
                vt.insert("name".into(), Value::String(v.name.clone()));
                Value::Table(vt)
            })
            .collect();
        t.insert("variants".into(), Value::Array(vs));
        toml::to_string(&t).expect("table serializes")
    }

    pub fn variant(&self, name: Option<&str>) -> Result<&Variant> {
        match name {
            None => Ok(&self.variants[0]),
            Some(n) => match self.variants.iter().find(|v| v.name == n) {
                Some(v) => Ok(v),
                None => invalid(format!("no variant named `{n}`")),
            },
        }
    }

    /// Replaces the variants with their product against a grid of values.
    pub fn expand<F>(&mut self, grid: &[f64], label: &str, apply: F)
    where
        F: Fn(&mut RunSettings, f64),
    {
        let mut out = Vec::with_capacity(self.variants.len() * grid.len());
        for v in &self.variants {
            for &x in grid {
                let mut s = v.settings.clone();
                apply(&mut s, x);
                out.push(Variant { name: format!("{}-{label}{x}", v.name), settings: s });
            }
        }
        self.variants = out;
    }
}
