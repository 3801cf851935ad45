use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use ecorl::agent::{DqnAgent, DqnConfig};
use ecorl::gridworld::{EnvConfig, ShapingSchedule, Task};
use ecorl::harness::{
    evaluate, hitting_time, marginal_state_entropy, mean_std, record_trajectory, run_training, validation_set,
    visitation_heatmap, GreedyPolicy, RunConfig, UniformPolicy,
};
use ecorl::mdpcore::{compare_shaped_chain, fuzz_dynamism_theorem, iteration_bound};
use ecorl::seeding;
use ecorl::{Agent, AgentCheckpoint};
use serde::Serialize;
use serde_json::json;

use crate::config::{Experiment, RunSettings};
use crate::output::{guard_file, matrix_csv, prepare_dir, write_json, write_jsonl, write_run};
use crate::{Cli, Command, EnvArgs, TheoryCommand};

/// Runs one command. `Ok(false)` means it ran but a check failed.
pub fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Train { epochs } => {
            let exp = load_experiment(cli, *epochs)?;
            train(cli, &exp)
        }
        Command::Sweep { p_grid, lr_grid, dry_run, epochs } => {
            let mut exp = load_experiment(cli, *epochs)?;
            if !p_grid.is_empty() {
                exp.expand(p_grid, "p", |s, p| s.dynamism_p = p);
            } else {
                exp.expand(lr_grid, "lr", |s, lr| s.learning_rate = lr);
            }
            let exp = Experiment::parse(&exp.to_toml()).context("expanded sweep")?;
            if *dry_run {
                print!("{}", exp.to_toml());
                return Ok(true);
            }
            train(cli, &exp)
        }
        Command::Eval { checkpoint, env } => eval(cli, checkpoint, env),
        Command::HittingTime { env, runs, cap } => {
            let cfg = resolve_env(cli, env)?;
            let seed = cli.seed.unwrap_or(0);
            let stats = hitting_time(&cfg, *runs, *cap, seed)?;
            let report = json!({
                "task": cfg.task,
                "dynamism_p": cfg.dynamism_p,
                "shaped": cfg.shaping.is_some(),
                "runs": runs,
                "cap": cap,
                "seed": seed,
                "mean": stats.mean,
                "std": stats.std,
                "censored": stats.censored,
            });
            emit(cli, "hitting_time.json", &report)?;
            Ok(true)
        }
        Command::Entropy { env, steps, runs } => {
            let cfg = resolve_env(cli, env)?;
            let seed = cli.seed.unwrap_or(0);
            let per_run = (0..*runs as u64)
                .map(|k| {
                    let e = cfg.with_seed(seeding::derive_indexed(seed, "entropy-env", k));
                    marginal_state_entropy(&e, &mut UniformPolicy, *steps, seeding::derive_indexed(seed, "entropy-policy", k))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let (mean, std) = mean_std(&per_run);
            let report = json!({
                "task": cfg.task,
                "dynamism_p": cfg.dynamism_p,
                "steps": steps,
                "seed": seed,
                "entropy_nats": per_run,
                "mean": mean,
                "std": std,
            });
            emit(cli, "entropy.json", &report)?;
            Ok(true)
        }
        Command::Heatmap { env, steps, checkpoint } => heatmap(cli, env, *steps, checkpoint.as_deref()),
        Command::Theory { command: TheoryCommand::Verify { trials, max_states } } => {
            theory_verify(cli, *trials, *max_states)
        }
    }
}

fn load_experiment(cli: &Cli, epochs: Option<usize>) -> Result<Experiment> {
    let Some(path) = &cli.config else {
        bail!("this command needs --config");
    };
    let mut exp = Experiment::load(path)?;
    if let Some(s) = cli.seed {
        exp.seed = s;
    }
    if let Some(out) = &cli.out {
        exp.output_dir = out.clone();
    }
    if let Some(n) = epochs {
        for v in &mut exp.variants {
            v.settings.epochs = n;
        }
        exp.validate()?;
    }
    Ok(exp)
}

#[derive(Serialize)]
struct VariantSummary {
    name: String,
    task: Task,
    dir: PathBuf,
    final_solve_rate: f64,
    solve_rate_std: f64,
}

fn train(cli: &Cli, exp: &Experiment) -> Result<bool> {
    let root = exp.output_dir.join(&exp.name);
    let dirs: Vec<PathBuf> = exp.variants.iter().map(|v| root.join(v.settings.task.name()).join(&v.name)).collect();
    for d in &dirs {
        if d.exists() && !cli.overwrite {
            bail!("{} already exists; pass --overwrite to replace it", d.display());
        }
    }
    guard_file(&root.join("summary.json"), cli.overwrite)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(exp.parallelism).build()?;
    let mut summary = Vec::with_capacity(exp.variants.len());
    for (v, dir) in exp.variants.iter().zip(&dirs) {
        let cfg = v.settings.run_config();
        eprintln!("training {} ({} seeds x {} epochs)", v.name, cfg.seeds.len(), cfg.epochs);
        let run = pool.install(|| run_training(&cfg, exp.seed))?;
        prepare_dir(dir, cli.overwrite)?;
        write_run(dir, &run)?;
        let last = run.aggregate.last();
        summary.push(VariantSummary {
            name: v.name.clone(),
            task: v.settings.task,
            dir: dir.clone(),
            final_solve_rate: run.final_solve_rate(),
            solve_rate_std: last.map_or(0.0, |r| r.solve_rate_std),
        });
        eprintln!("  final solve rate {:.3}", run.final_solve_rate());
    }
    fs::write(root.join("config.toml"), exp.to_toml())?;
    write_json(&root.join("summary.json"), &json!({ "schema": 1, "experiment": exp.name, "seed": exp.seed, "variants": summary }))?;
    Ok(true)
}

/// Base settings for the diagnostic commands.
fn resolve_settings(cli: &Cli, env: &EnvArgs) -> Result<RunSettings> {
    let mut s = match &cli.config {
        Some(path) => Experiment::load(path)?.variant(env.variant.as_deref())?.settings.clone(),
        None => {
            let Some(task) = &env.task else {
                bail!("give --task or --config");
            };
            RunSettings::new(Task::from_str(task)?)
        }
    };
    if cli.config.is_some() {
        if let Some(task) = &env.task {
            s.task = Task::from_str(task)?;
        }
    }
    if let Some(p) = env.dynamism_p {
        s.dynamism_p = p;
    }
    if env.shaped {
        s.shaping = crate::config::Shaping::Schedule(ShapingSchedule::default());
    }
    Ok(s)
}

fn resolve_env(cli: &Cli, env: &EnvArgs) -> Result<EnvConfig> {
    let cfg = resolve_settings(cli, env)?.env();
    cfg.validate()?;
    Ok(cfg)
}

/// Prints `value` and, with `--out`, also writes it to `<out>/<file>`.
fn emit<T: Serialize>(cli: &Cli, file: &str, value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    if let Some(out) = &cli.out {
        let path = out.join(file);
        guard_file(&path, cli.overwrite)?;
        write_json(&path, value)?;
    }
    Ok(())
}

fn load_agent(path: &Path) -> Result<(AgentCheckpoint, Agent)> {
    let ck = AgentCheckpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    let agent = DqnAgent::from_network(ck.network.clone(), ck.channels, DqnConfig::default());
    Ok((ck, agent))
}

fn eval(cli: &Cli, checkpoint: &Path, env: &EnvArgs) -> Result<bool> {
    let (ck, agent) = load_agent(checkpoint)?;
    let settings = match (&cli.config, &env.task) {
        (None, None) => RunSettings::new(ck.task),
        _ => resolve_settings(cli, env)?,
    };
    if settings.task != ck.task {
        bail!("checkpoint was trained on {} but the evaluation task is {}", ck.task, settings.task);
    }
    let run: RunConfig = settings.run_config();
    run.validate()?;
    let eval_env = run.eval_env();
    let validation = validation_set(&eval_env, run.n_validation)?;
    let solve_rate = evaluate(&|o: &[_]| agent.greedy_actions(o), &validation, &eval_env);
    let report = json!({
        "checkpoint": checkpoint,
        "task": ck.task,
        "global_step": ck.global_step,
        "n_validation": run.n_validation,
        "eval_horizon": run.eval_horizon,
        "solve_rate": solve_rate,
    });
    emit(cli, "eval.json", &report)?;
    Ok(true)
}

fn heatmap(cli: &Cli, env: &EnvArgs, steps: u64, checkpoint: Option<&Path>) -> Result<bool> {
    let mut cfg = resolve_env(cli, env)?;
    let seed = cli.seed.unwrap_or(0);
    cfg.seed = seeding::derive(seed, "heatmap-env");
    let policy_seed = seeding::derive(seed, "heatmap-policy");
    let traj = match checkpoint {
        Some(p) => {
            let (ck, agent) = load_agent(p)?;
            if ck.task != cfg.task {
                bail!("checkpoint was trained on {} but the environment is {}", ck.task, cfg.task);
            }
            record_trajectory(&cfg, &mut GreedyPolicy(&agent), steps, policy_seed)?
        }
        None => record_trajectory(&cfg, &mut UniformPolicy, steps, policy_seed)?,
    };
    let positions: Vec<_> = traj.iter().map(|r| r.agent_pos).collect();
    let counts = visitation_heatmap(&positions, cfg.grid_size)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let csv = out.join("heatmap.csv");
    let jsonl = out.join("trajectory.jsonl");
    guard_file(&csv, cli.overwrite)?;
    guard_file(&jsonl, cli.overwrite)?;
    fs::write(&csv, matrix_csv(&counts))?;
    write_jsonl(&jsonl, &traj)?;
    eprintln!("wrote {} and {}", csv.display(), jsonl.display());
    Ok(true)
}

fn theory_verify(cli: &Cli, trials: usize, max_states: usize) -> Result<bool> {
    let seed = cli.seed.unwrap_or(0);
    let mut rng = seeding::stream(seed, "theory-fuzz");
    let rows = fuzz_dynamism_theorem(&mut rng, trials, max_states)?;
    let mut csv = String::from("trial_id,n_states,epsilon_mass,linf_before,linf_after,pass\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{:e},{:e},{:e},{}\n",
            r.trial_id, r.n_states, r.epsilon_mass, r.linf_before, r.linf_after, r.pass
        ));
    }
    match &cli.out {
        Some(out) => {
            let path = out.join("theory_verify.csv");
            guard_file(&path, cli.overwrite)?;
            fs::write(&path, &csv)?;
        }
        None => print!("{csv}"),
    }
    let violations = rows.iter().filter(|r| !r.pass).count();
    eprintln!("dynamism fuzz: {} trials, {violations} violations", rows.len());

    let chain = compare_shaped_chain(3, 2, 2, 0.99f64)?;
    let chain_ok = chain.unshaped >= 2.0 * chain.shaped_total;
    eprintln!(
        "shaping chain (k=3, H=2, |A|=2): unshaped {:.4} vs shaped total {:.4} -> {}",
        chain.unshaped,
        chain.shaped_total,
        if chain_ok { "ok" } else { "FAIL" }
    );
    let b1 = iteration_bound(0.9f64, 10, 2, 0.1, 1.0)?;
    let b2 = iteration_bound(0.9f64, 10, 2, 0.1, 2.0)?;
    let bound_ok = b2 > b1 && (b2 / b1 - 4.0).abs() < 1e-12;
    eprintln!("iteration bound scales with mismatch^2 -> {}", if bound_ok { "ok" } else { "FAIL" });
    Ok(violations == 0 && chain_ok && bound_ok)
}
