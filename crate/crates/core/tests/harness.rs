use std::cell::RefCell;

use ecorl::agent::{DqnAgent, DqnConfig};
use ecorl::gridworld::{EnvConfig, ObsCode, Pos, ShapingSchedule, Task, N_ACTIONS, TRAIN_HORIZON};
use ecorl::harness::{
    evaluate, first_reward_step, hitting_time, marginal_state_entropy, record_trajectory, run_training, validation_set, visitation_heatmap,
    RunConfig, UniformPolicy,
};
use ecorl::seeding;
use rand::Rng as _;

/// A run that is cheap to train: one seed, small batches.
fn quick(env: EnvConfig, epochs: usize) -> RunConfig {
    let mut cfg = RunConfig::new(env);
    cfg.epochs = epochs;
    cfg.seeds = vec![0];
    cfg.n_validation = 10;
    cfg.dqn.batch_size = 4;
    cfg.dqn.replay_capacity = 20_000;
    cfg
}

#[test]
fn random_weights_rarely_solve_salad() {
    let cfg = RunConfig::new(EnvConfig::new(Task::SaladMaking));
    let eval_env = cfg.eval_env();
    let validation = validation_set(&eval_env, 100).unwrap();
    let mut rates = Vec::new();
    for s in 0..5 {
        let mut rng = seeding::stream(s, "init");
        let agent = DqnAgent::<f32>::new(Task::SaladMaking.n_channels(), N_ACTIONS, DqnConfig::default(), &mut rng).unwrap();
        rates.push(evaluate(&|o: &[ObsCode]| agent.greedy_actions(o), &validation, &eval_env));
    }
    assert!(rates.iter().all(|r| *r <= 0.05), "{rates:?}");

    // Monte-Carlo oracle: even a uniform policy seldom finishes in 100 steps.
    let rng = RefCell::new(seeding::stream(1, "uniform-eval"));
    let uniform = evaluate(
        &|o: &[ObsCode]| o.iter().map(|_| rng.borrow_mut().gen_range(0..N_ACTIONS)).collect(),
        &validation,
        &eval_env,
    );
    assert!(uniform <= 0.05, "{uniform}");
}

#[test]
fn one_epoch_is_5000_env_and_gradient_steps() {
    let art = run_training(&quick(EnvConfig::new(Task::Hunting), 2), 0).unwrap();
    let recs = &art.seeds[0].records;
    assert_eq!((recs[0].env_steps, recs[0].grad_steps), (5000, 5000));
    assert_eq!((recs[1].env_steps, recs[1].grad_steps), (10_000, 10_000));
    for r in recs {
        assert!((0.0..=1.0).contains(&r.solve_rate));
    }
}

#[test]
fn non_episodic_resets_exactly_once() {
    for task in [Task::Hunting, Task::SaladMaking] {
        let mut cfg = quick(EnvConfig::new(task), 2);
        cfg.grad_steps_per_collect = 1;
        let art = run_training(&cfg, 3).unwrap();
        assert_eq!(art.seeds[0].resets, 1);
        assert!(art.seeds[0].records.iter().all(|r| r.resets == 1));
    }
}

#[test]
fn episodic_resets_every_horizon_when_nothing_completes() {
    // Without carrots a salad can never be made.
    let mut env = EnvConfig::new(Task::SaladMaking);
    env.episodic = true;
    env.counts.carrots = 0;
    let mut cfg = quick(env, 2);
    cfg.grad_steps_per_collect = 1;
    let art = run_training(&cfg, 0).unwrap();
    let recs = &art.seeds[0].records;
    assert!(recs.iter().all(|r| r.completions == 0));
    assert_eq!(recs[0].resets, 1 + 5000 / TRAIN_HORIZON as u64);
    assert_eq!(recs[1].resets, 1 + 10_000 / TRAIN_HORIZON as u64);
}

#[test]
fn evaluation_leaves_its_inputs_alone() {
    let cfg = RunConfig::new(EnvConfig::new(Task::Hunting));
    let eval_env = cfg.eval_env();
    let validation = validation_set(&eval_env, 30).unwrap();
    let before = validation.clone();
    let mut rng = seeding::stream(0, "init");
    let agent = DqnAgent::<f32>::new(Task::Hunting.n_channels(), N_ACTIONS, DqnConfig::default(), &mut rng).unwrap();
    let params = agent.online().params().to_vec();
    let a = evaluate(&|o: &[ObsCode]| agent.greedy_actions(o), &validation, &eval_env);
    let b = evaluate(&|o: &[ObsCode]| agent.greedy_actions(o), &validation, &eval_env);
    assert_eq!(a, b);
    assert_eq!(validation, before);
    assert_eq!(agent.online().params(), &params[..]);
    assert_eq!(agent.grad_steps(), 0);

    // Interleaving evaluations does not perturb training.
    let mut run = quick(EnvConfig::new(Task::Hunting), 2);
    run.grad_steps_per_collect = 20;
    let x = run_training(&run, 5).unwrap();
    let mut more = run.clone();
    more.n_validation = 40;
    let y = run_training(&more, 5).unwrap();
    assert_eq!(x.seeds[0].checkpoint, y.seeds[0].checkpoint);
    for (r, s) in x.seeds[0].records.iter().zip(&y.seeds[0].records) {
        assert_eq!((r.loss, r.completions, r.train_reward_rate), (s.loss, s.completions, s.train_reward_rate));
    }
}

#[test]
fn validation_set_is_frozen_across_methods() {
    let base = EnvConfig::new(Task::Factory);
    let mut variants = vec![base.clone()];
    let mut shaped = base.clone();
    shaped.shaping = Some(ShapingSchedule::default());
    variants.push(shaped);
    let mut dynamic = base.clone();
    dynamic.dynamism_p = 0.1;
    dynamic.episodic = true;
    variants.push(dynamic);
    let sets: Vec<_> = variants
        .iter()
        .map(|e| {
            let cfg = RunConfig::new(e.clone());
            assert!(cfg.eval_env().is_original());
            validation_set(&cfg.eval_env(), 100).unwrap()
        })
        .collect();
    assert!(sets.iter().all(|s| *s == sets[0]));
    assert_eq!(sets[0], validation_set(&RunConfig::new(base).eval_env(), 100).unwrap());
}

#[test]
fn heatmap_of_a_stationary_agent_is_one_cell() {
    let h = visitation_heatmap(&vec![Pos::new(5, 1); 1000], 8).unwrap();
    assert_eq!(h[1][5], 1000);
    assert_eq!(h.iter().flatten().sum::<u64>(), 1000);
    assert!(visitation_heatmap(&[Pos::new(0, 8)], 8).is_err());
}

#[test]
fn uniform_walk_covers_an_empty_grid_evenly() {
    let mut env = EnvConfig::new(Task::SaladMaking);
    env.counts.lettuce = 0;
    env.counts.carrots = 0;
    env.nonepisodic_respawn = false;
    let traj = record_trajectory(&env, &mut UniformPolicy, 100_000, 9).unwrap();
    let positions: Vec<Pos> = traj.iter().map(|r| r.agent_pos).collect();
    let h = visitation_heatmap(&positions, 8).unwrap();
    let cells: Vec<u64> = h.into_iter().flatten().collect();
    assert_eq!(cells.iter().sum::<u64>(), 100_000);
    let (lo, hi) = (*cells.iter().min().unwrap(), *cells.iter().max().unwrap());
    assert!(lo > 0 && (hi as f64) / (lo as f64) < 10.0, "{lo}..{hi}");
}

#[test]
fn hitting_time_needs_runs() {
    assert!(hitting_time(&EnvConfig::new(Task::Factory), 0, 100, 0).is_err());
    let stats = hitting_time(&EnvConfig::new(Task::Scavenging), 20, 10_000, 0).unwrap();
    assert!(stats.mean >= 1.0);
}

#[test]
fn first_reward_is_counted_from_one() {
    let mut env = EnvConfig::new(Task::Scavenging);
    env.grid_size = 2;
    env.counts.predators = 0;
    let times: Vec<u64> = (0..50)
        .map(|s| first_reward_step(&env.with_seed(s), s, 1000).unwrap().expect("a 2x2 grid is always solved"))
        .collect();
    assert!(times.iter().all(|t| *t >= 1));
    assert_eq!(*times.iter().min().unwrap(), 1);
}

#[test]
fn dynamism_raises_entropy_on_paired_seeds() {
    let base = EnvConfig::new(Task::Factory);
    let mut wins = 0;
    for k in 0..10 {
        let env = base.with_seed(seeding::derive_indexed(0, "entropy-env", k));
        let policy_seed = seeding::derive_indexed(0, "entropy-policy", k);
        let still = marginal_state_entropy(&env, &mut UniformPolicy, 10_000, policy_seed).unwrap();
        let mut dynamic = env.clone();
        dynamic.dynamism_p = 0.5;
        let moving = marginal_state_entropy(&dynamic, &mut UniformPolicy, 10_000, policy_seed).unwrap();
        wins += usize::from(moving >= still);
    }
    assert!(wins >= 9, "{wins}/10");
}
