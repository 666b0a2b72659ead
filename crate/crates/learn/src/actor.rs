//! Planner actors: run the search on the current belief, act, record.

use guidedplan_core::env::Environment;
use guidedplan_core::scenarios::{derive_seed, unit_f64};
use guidedplan_core::search::HISTORY_FRAMES;
use guidedplan_core::{particle_bayes_update, run_search, Belief, DomainModel, HeuristicProvider, SearchConfig};

use crate::error::Result;
use crate::tuple::ExperienceTuple;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActorMode {
    /// Execute the planner's action.
    Exploit,
    /// Sample from a softmax of the root action values.
    Explore { temperature: f64 },
    /// Sample from the provider's policy prior.
    OnPolicy,
}

impl ActorMode {
    pub fn name(&self) -> &'static str {
        match self {
            ActorMode::Exploit => "exploit",
            ActorMode::Explore { .. } => "explore",
            ActorMode::OnPolicy => "on_policy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exploit" => Some(ActorMode::Exploit),
            "explore" => Some(ActorMode::Explore { temperature: 1.0 }),
            "on_policy" => Some(ActorMode::OnPolicy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorConfig {
    pub mode: ActorMode,
    pub search: SearchConfig,
    pub particles: usize,
    pub max_steps: usize,
    pub parallel: bool,
}

impl Default for ActorConfig {
    fn default() -> Self {
        Self {
            mode: ActorMode::Exploit,
            search: SearchConfig::default(),
            particles: 200,
            max_steps: 100,
            parallel: false,
        }
    }
}

/// Per-episode summary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: u64,
    pub steps: usize,
    /// Undiscounted sum of environment rewards.
    pub cumulative_reward: f64,
    pub near_miss_steps: usize,
    pub speed_sum: f64,
    pub collision: bool,
    pub tree_nodes: f64,
    pub tree_depth: f64,
    pub trials: f64,
    pub searches: usize,
    /// The episode ended on an error rather than termination or step cap.
    pub partial: bool,
}

impl EpisodeMetrics {
    pub fn near_miss_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.near_miss_steps as f64 / self.steps as f64
        }
    }

    pub fn average_speed(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.speed_sum / self.steps as f64
        }
    }

    pub fn mean_tree_nodes(&self) -> f64 {
        self.per_search(self.tree_nodes)
    }

    pub fn mean_tree_depth(&self) -> f64 {
        self.per_search(self.tree_depth)
    }

    pub fn mean_trials(&self) -> f64 {
        self.per_search(self.trials)
    }

    fn per_search(&self, v: f64) -> f64 {
        if self.searches == 0 {
            0.0
        } else {
            v / self.searches as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub tuples: Vec<ExperienceTuple>,
    pub metrics: EpisodeMetrics,
}

fn sample_categorical(p: &[f64], u: f64) -> usize {
    let total: f64 = p.iter().sum();
    let mut acc = 0.0;
    for (i, w) in p.iter().enumerate() {
        acc += w / total;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn softmax_t(values: &[f64], temperature: f64) -> Vec<f64> {
    let t = temperature.max(1e-12);
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values.iter().map(|v| ((v - m) / t).exp()).collect()
}

/// How the next action is chosen when no search is run.
enum Decision<'p, P> {
    Search(&'p P),
    PolicyAlone(&'p P),
}

/// An episode in progress, advanced one planning step at a time.
pub struct EpisodeRunner<'e, E: Environment> {
    env: &'e mut E,
    config: ActorConfig,
    belief: Belief<<E::Model as DomainModel>::State>,
    history: Vec<<E::Model as DomainModel>::Observation>,
    seed: u64,
    done: bool,
    metrics: EpisodeMetrics,
}

impl<'e, E: Environment> EpisodeRunner<'e, E> {
    pub fn new(env: &'e mut E, config: ActorConfig, episode: u64, seed: u64) -> Self {
        let start = env.reset(derive_seed(seed, 0));
        Self {
            env,
            config,
            belief: start.belief,
            history: start.observation.into_iter().collect(),
            seed,
            done: false,
            metrics: EpisodeMetrics {
                episode,
                ..Default::default()
            },
        }
    }

    pub fn finished(&self) -> bool {
        self.done || self.metrics.steps >= self.config.max_steps
    }

    pub fn metrics(&self) -> &EpisodeMetrics {
        &self.metrics
    }

    pub fn into_metrics(self) -> EpisodeMetrics {
        self.metrics
    }

    pub fn mark_partial(&mut self) {
        self.metrics.partial = true;
        self.done = true;
    }

    fn features(&self) -> Vec<f64> {
        self.env.model().encode_history(&self.history)
    }

    /// Plans, acts and records one tuple; `None` once the episode is over.
    pub fn step<P: HeuristicProvider>(&mut self, provider: &P) -> Result<Option<ExperienceTuple>> {
        self.advance(Decision::Search(provider))
    }

    /// Samples from the provider's policy prior without searching.
    pub fn step_policy<P: HeuristicProvider>(&mut self, provider: &P) -> Result<Option<ExperienceTuple>> {
        self.advance(Decision::PolicyAlone(provider))
    }

    fn advance<P: HeuristicProvider>(&mut self, decision: Decision<'_, P>) -> Result<Option<ExperienceTuple>> {
        if self.finished() {
            return Ok(None);
        }
        let k = self.metrics.steps as u64;
        let x = self.features();
        let (action, planner_action, value) = match decision {
            Decision::Search(provider) => {
                let seed = derive_seed(self.seed, 10 + 3 * k);
                let result = run_search(&self.belief, &self.history, &self.config.search, provider, self.env.model(), seed)?;
                self.metrics.searches += 1;
                self.metrics.tree_nodes += result.nodes as f64;
                self.metrics.tree_depth += result.max_depth as f64;
                self.metrics.trials += result.trials as f64;
                let u = unit_f64(derive_seed(self.seed, 11 + 3 * k));
                let action = match self.config.mode {
                    ActorMode::Exploit => result.action,
                    ActorMode::Explore { temperature } if !result.action_values.is_empty() => {
                        sample_categorical(&softmax_t(&result.action_values, temperature), u)
                    }
                    ActorMode::Explore { .. } => result.action,
                    ActorMode::OnPolicy => sample_categorical(&provider.policy_prior(&x), u),
                };
                (action, result.action, result.value)
            }
            Decision::PolicyAlone(provider) => {
                let u = unit_f64(derive_seed(self.seed, 11 + 3 * k));
                let a = sample_categorical(&provider.policy_prior(&x), u);
                (a, a, guidedplan_core::FactoredValue::ZERO)
            }
        };
        let out = self.env.step(action);
        self.history.push(out.observation.clone());
        if self.history.len() > HISTORY_FRAMES {
            self.history.remove(0);
        }
        let next_x = self.features();
        self.metrics.steps += 1;
        self.metrics.cumulative_reward += out.reward.total();
        self.metrics.speed_sum += out.metrics.speed;
        self.metrics.near_miss_steps += usize::from(out.metrics.near_miss);
        self.metrics.collision |= out.metrics.collision;
        self.done = out.done;
        if !self.finished() {
            let update = particle_bayes_update(
                &self.belief,
                action,
                &out.observation,
                self.env.model(),
                self.config.particles,
                derive_seed(self.seed, 12 + 3 * k),
                self.config.parallel,
            )?;
            self.belief = update.belief;
        }
        Ok(Some(ExperienceTuple {
            episode: self.metrics.episode,
            step: k as u32,
            x,
            action,
            reward: out.reward,
            rl_reward: out.rl_reward,
            planner_action,
            value,
            done: out.done,
            next_x,
        }))
    }
}

/// Runs one episode to termination or the step cap. Errors end the
/// episode early with the trajectory flagged partial.
pub fn collect_episode<E, P>(env: &mut E, config: &ActorConfig, provider: &P, episode: u64, seed: u64) -> Trajectory
where
    E: Environment,
    P: HeuristicProvider,
{
    let mut runner = EpisodeRunner::new(env, config.clone(), episode, seed);
    let mut tuples = Vec::new();
    loop {
        match runner.step(provider) {
            Ok(Some(t)) => tuples.push(t),
            Ok(None) => break,
            Err(e) => {
                log::warn!("episode {episode} ended early: {e}");
                runner.mark_partial();
                break;
            }
        }
    }
    Trajectory {
        tuples,
        metrics: runner.into_metrics(),
    }
}
