use std::sync::{Arc, Mutex};

use guidedplan_core::oracle::{TigerEnv, TigerModel};
use guidedplan_core::{DiscountSpec, DomainModel, SearchConfig, UniformProvider};
use guidedplan_driving::{DrivingConfig, DrivingEnv, DrivingModel, LaneGraph};
use guidedplan_learn::{
    closed_loop, collect_episode, evaluate_planner, evaluate_policy, ActorConfig, ActorMode, EvalSummary,
    LearnerConfig, LoopConfig, RlLearner, SslLearner,
};
use guidedplan_nn::{ApproximatorParams, NetworkConfig};

fn tiger_actor(mode: ActorMode) -> ActorConfig {
    ActorConfig {
        mode,
        search: SearchConfig {
            scenario_count: 10,
            discount: DiscountSpec {
                gamma: 0.95,
                max_horizon: 8,
                search_depth: 3,
            },
            max_trials: Some(10),
            time_budget: None,
            ..Default::default()
        },
        particles: 100,
        max_steps: 12,
        parallel: false,
    }
}

fn tiger_env(_: usize) -> TigerEnv {
    TigerEnv::new(TigerModel::default())
}

fn net() -> NetworkConfig {
    NetworkConfig {
        trunk: vec![16],
        head_hidden: 8,
        value_scale: 100.0,
    }
}

fn ssl_learner(seed: u64) -> SslLearner {
    SslLearner::new(
        ApproximatorParams::new(12, 3, &net(), seed),
        LearnerConfig {
            batch_size: 16,
            seed,
            ..Default::default()
        },
    )
}

#[test]
fn exploit_actor_records_contiguous_planner_actions() {
    let mut env = tiger_env(0);
    let actor = tiger_actor(ActorMode::Exploit);
    let a = collect_episode(&mut env, &actor, &UniformProvider::new(3), 4, 99);
    assert_eq!(a.tuples.len(), 12);
    for (i, t) in a.tuples.iter().enumerate() {
        assert_eq!(t.step as usize, i);
        assert_eq!(t.episode, 4);
        assert_eq!(t.action, t.planner_action);
        assert!((t.value.safe + t.value.collision - t.value.total).abs() < 1e-9);
    }
    assert!(!a.metrics.partial);
    let b = collect_episode(&mut env, &actor, &UniformProvider::new(3), 4, 99);
    assert_eq!(a, b);
}

#[test]
fn exploring_actors_deviate_from_the_planner() {
    let mut env = tiger_env(0);
    for mode in [ActorMode::Explore { temperature: 50.0 }, ActorMode::OnPolicy] {
        let mut deviations = 0;
        for ep in 0..5 {
            let t = collect_episode(&mut env, &tiger_actor(mode), &UniformProvider::new(3), ep, ep);
            deviations += t.tuples.iter().filter(|t| t.action != t.planner_action).count();
        }
        assert!(deviations > 0, "{mode:?}");
    }
}

#[test]
fn driving_episode_is_reproducible() {
    let model = DrivingModel::new(LaneGraph::default_intersection(), DrivingConfig::default());
    let actor = ActorConfig {
        search: SearchConfig {
            scenario_count: 8,
            discount: DiscountSpec {
                gamma: 0.95,
                max_horizon: 10,
                search_depth: 4,
            },
            max_trials: Some(8),
            time_budget: None,
            ..Default::default()
        },
        particles: 50,
        max_steps: 15,
        ..Default::default()
    };
    let run = || {
        let mut env = DrivingEnv::new(model.clone(), 15, 50);
        collect_episode(&mut env, &actor, &UniformProvider::new(9), 0, 2024)
    };
    let a = run();
    assert!(!a.tuples.is_empty());
    assert_eq!(a.tuples[0].x.len(), model.feature_len());
    assert!(a.tuples.iter().all(|t| t.action == t.planner_action && t.action < 9));
    assert_eq!(a, run());
    assert!((0.0..=1.0).contains(&a.metrics.near_miss_rate()));
}

fn loop_config(single_thread: bool, budget: u64) -> LoopConfig {
    LoopConfig {
        budget,
        updates_per_tuple: 1,
        actor_modes: vec![ActorMode::Exploit, ActorMode::Explore { temperature: 1.0 }, ActorMode::OnPolicy],
        actors: 2,
        buffer_capacity: 1_000,
        snapshot_interval: 50,
        eval_interval: 100,
        single_thread,
        seed: 8,
    }
}

#[test]
fn single_thread_loop_spends_exactly_the_budget_and_repeats() {
    let run = || {
        let mut learner = ssl_learner(1);
        let mut evals = Vec::new();
        let out = closed_loop(
            tiger_env,
            &tiger_actor(ActorMode::Exploit),
            &mut learner,
            &loop_config(true, 250),
            &mut |n, _| {
                evals.push(n);
                Ok(())
            },
        )
        .unwrap();
        (out, evals, learner.params().clone())
    };
    let (a, evals, params) = run();
    assert_eq!(a.inserted, 250);
    assert_eq!(a.buffer.as_ref().unwrap().len(), 250);
    assert_eq!(a.episodes.iter().map(|m| m.steps).sum::<usize>(), 250);
    assert_eq!(a.updates, 250 - 15);
    assert_eq!(a.final_version, a.updates / 50);
    assert_eq!(evals, vec![100, 200]);
    assert!(a.observed_versions[0].windows(2).all(|w| w[0] <= w[1]));
    let (b, _, params_b) = run();
    assert_eq!(a.stats, b.stats);
    assert_eq!(a.episodes, b.episodes);
    assert_eq!(params, params_b);
}

#[test]
fn concurrent_loop_is_live_and_monotone() {
    let mut learner = ssl_learner(2);
    let evals = Arc::new(Mutex::new(Vec::new()));
    let e2 = Arc::clone(&evals);
    let out = closed_loop(
        tiger_env,
        &tiger_actor(ActorMode::Exploit),
        &mut learner,
        &loop_config(false, 300),
        &mut move |n, _| {
            e2.lock().unwrap().push(n);
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(out.inserted, 300);
    let buffer = out.buffer.as_ref().unwrap();
    assert_eq!(buffer.len(), 300);
    assert_eq!(out.updates, 300 - 15);
    assert_eq!(out.observed_versions.len(), 2);
    for versions in &out.observed_versions {
        assert!(versions.windows(2).all(|w| w[0] <= w[1]));
        assert!(versions.iter().all(|v| *v <= out.final_version));
    }
    assert_eq!(*evals.lock().unwrap(), vec![100, 200, 300]);
    let mut keys: Vec<_> = buffer.iter().map(|t| (t.episode, t.step)).collect();
    keys.sort_unstable();
    keys.dedup();
    assert_eq!(keys.len(), 300);
}

#[test]
fn reinforcement_loop_runs_on_tiger() {
    let mut learner = RlLearner::with_networks(
        12,
        3,
        &net(),
        LearnerConfig {
            batch_size: 16,
            ..Default::default()
        },
    );
    let out = closed_loop(
        tiger_env,
        &tiger_actor(ActorMode::Exploit),
        &mut learner,
        &loop_config(true, 120),
        &mut |_, _| Ok(()),
    )
    .unwrap();
    assert_eq!(out.inserted, 120);
    assert!(out.stats.iter().all(|s| s.q_loss.is_finite() && s.policy_loss.is_finite()));
    assert!(learner.params().is_finite());
}

#[test]
fn evaluation_summaries() {
    let empty = evaluate_planner(tiger_env, &tiger_actor(ActorMode::Exploit), &UniformProvider::new(3), &[]);
    let s = EvalSummary::from_episodes(&empty);
    assert_eq!(s.episodes, 0);
    assert_eq!(s.reward.mean, 0.0);

    let seeds: Vec<u64> = (0..6).collect();
    let a = evaluate_planner(tiger_env, &tiger_actor(ActorMode::Exploit), &UniformProvider::new(3), &seeds);
    let b = evaluate_planner(tiger_env, &tiger_actor(ActorMode::Exploit), &UniformProvider::new(3), &seeds);
    assert_eq!(a, b);
    assert_eq!(EvalSummary::from_episodes(&a), EvalSummary::from_episodes(&b));
}

/// A uniform policy on Tiger listens a third of the time (-1) and opens a
/// door otherwise (+10 or -100 with equal odds): -91/3 per step.
#[test]
fn uniform_policy_alone_matches_random_baseline() {
    let mut actor = tiger_actor(ActorMode::Exploit);
    actor.max_steps = 20;
    let seeds: Vec<u64> = (0..400).map(|i| 1_000 + i).collect();
    let eps = evaluate_policy(tiger_env, &actor, &UniformProvider::new(3), &seeds);
    let s = EvalSummary::from_episodes(&eps);
    let expected = -91.0 / 3.0 * 20.0;
    assert!(
        (s.reward.mean - expected).abs() < 4.0 * s.reward.stderr,
        "{} +- {} vs {expected}",
        s.reward.mean,
        s.reward.stderr
    );
    assert!(eps.iter().all(|m| m.searches == 0 && m.steps == 20));
}
