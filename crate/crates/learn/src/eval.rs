//! Evaluation episodes and summary statistics.

use guidedplan_core::env::Environment;
use guidedplan_core::{par, HeuristicProvider};

use crate::actor::{ActorConfig, ActorMode, EpisodeMetrics, EpisodeRunner};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanStderr {
    /// Sample mean and standard error (n - 1 denominator); zero spread
    /// for fewer than two values.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }

    /// Normal-approximation 95% interval.
    pub fn ci95(&self) -> (f64, f64) {
        let h = 1.959964 * self.stderr;
        (self.mean - h, self.mean + h)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalSummary {
    pub episodes: usize,
    pub reward: MeanStderr,
    pub near_miss_rate: MeanStderr,
    pub average_speed: MeanStderr,
    pub length: MeanStderr,
    pub collision_rate: f64,
    pub tree_nodes: MeanStderr,
    pub tree_depth: MeanStderr,
    pub trials: MeanStderr,
}

impl EvalSummary {
    pub fn from_episodes(episodes: &[EpisodeMetrics]) -> Self {
        let col = |f: &dyn Fn(&EpisodeMetrics) -> f64| MeanStderr::of(&episodes.iter().map(f).collect::<Vec<_>>());
        Self {
            episodes: episodes.len(),
            reward: col(&|m| m.cumulative_reward),
            near_miss_rate: col(&|m| m.near_miss_rate()),
            average_speed: col(&|m| m.average_speed()),
            length: col(&|m| m.steps as f64),
            collision_rate: if episodes.is_empty() {
                0.0
            } else {
                episodes.iter().filter(|m| m.collision).count() as f64 / episodes.len() as f64
            },
            tree_nodes: col(&|m| m.mean_tree_nodes()),
            tree_depth: col(&|m| m.mean_tree_depth()),
            trials: col(&|m| m.mean_trials()),
        }
    }
}

/// Planner-with-provider episodes: the planner's action is executed.
pub fn evaluate_planner<E, P, F>(make_env: F, actor: &ActorConfig, provider: &P, seeds: &[u64]) -> Vec<EpisodeMetrics>
where
    E: Environment,
    P: HeuristicProvider,
    F: Fn(usize) -> E + Sync,
{
    let mut cfg = actor.clone();
    cfg.mode = ActorMode::Exploit;
    let jobs: Vec<(usize, u64)> = seeds.iter().copied().enumerate().collect();
    par::map(actor.parallel, &jobs, |&(i, seed)| {
        let mut env = make_env(i);
        let mut runner = EpisodeRunner::new(&mut env, cfg.clone(), i as u64, seed);
        while !runner.finished() {
            if let Err(e) = runner.step(provider) {
                log::warn!("evaluation episode {i} ended early: {e}");
                runner.mark_partial();
            }
        }
        runner.into_metrics()
    })
}

/// Learner-alone episodes: actions sampled from the provider's policy
/// prior, no search.
pub fn evaluate_policy<E, P, F>(make_env: F, actor: &ActorConfig, provider: &P, seeds: &[u64]) -> Vec<EpisodeMetrics>
where
    E: Environment,
    P: HeuristicProvider,
    F: Fn(usize) -> E + Sync,
{
    let jobs: Vec<(usize, u64)> = seeds.iter().copied().enumerate().collect();
    par::map(actor.parallel, &jobs, |&(i, seed)| {
        let mut env = make_env(i);
        let mut runner = EpisodeRunner::new(&mut env, actor.clone(), i as u64, seed);
        while !runner.finished() {
            if let Err(e) = runner.step_policy(provider) {
                log::warn!("evaluation episode {i} ended early: {e}");
                runner.mark_partial();
            }
        }
        runner.into_metrics()
    })
}
