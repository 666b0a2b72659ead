//! Closed-loop training (actors feeding a learner) and the two-phase
//! open-loop variant.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use guidedplan_core::env::Environment;
use guidedplan_core::scenarios::derive_seed;
use guidedplan_core::HeuristicProvider;
use guidedplan_nn::{ApproximatorParams, NetworkProvider};

use crate::actor::{ActorConfig, ActorMode, EpisodeMetrics, EpisodeRunner};
use crate::buffer::{ReplayBuffer, DEFAULT_CAPACITY};
use crate::error::{LearnError, Result};
use crate::learner::{Learner, SslLearner, UpdateStats};
use crate::tuple::ExperienceTuple;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    /// Unique tuples to insert before stopping.
    pub budget: u64,
    /// Learner updates per inserted tuple.
    pub updates_per_tuple: usize,
    /// Actor modes, cycled over actors (or over episodes when single-threaded).
    pub actor_modes: Vec<ActorMode>,
    pub actors: usize,
    pub buffer_capacity: usize,
    /// Learner steps between provider snapshots.
    pub snapshot_interval: u64,
    /// Inserted tuples between evaluation callbacks; 0 disables them.
    pub eval_interval: u64,
    pub single_thread: bool,
    pub seed: u64,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            budget: 10_000,
            updates_per_tuple: 1,
            actor_modes: vec![ActorMode::Exploit],
            actors: 3,
            buffer_capacity: DEFAULT_CAPACITY,
            snapshot_interval: 50,
            eval_interval: 500,
            single_thread: true,
            seed: 0,
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.actor_modes.is_empty() {
            return Err(LearnError::InvalidConfig("at least one actor mode".into()));
        }
        if self.actors == 0 {
            return Err(LearnError::InvalidConfig("at least one actor".into()));
        }
        if self.snapshot_interval == 0 {
            return Err(LearnError::InvalidConfig("snapshot interval must be >= 1".into()));
        }
        Ok(())
    }
}

/// Called with the inserted-tuple count and the learner's current networks.
pub type EvalHook<'a> = dyn FnMut(u64, &ApproximatorParams) -> Result<()> + Send + 'a;

#[derive(Debug, Clone, Default)]
pub struct LoopOutcome {
    pub inserted: u64,
    pub updates: u64,
    pub episodes: Vec<EpisodeMetrics>,
    pub stats: Vec<UpdateStats>,
    /// Snapshot versions each actor planned with, in order.
    pub observed_versions: Vec<Vec<u64>>,
    pub final_version: u64,
    pub buffer: Option<ReplayBuffer>,
}

fn episode_seed(seed: u64, episode: u64) -> u64 {
    derive_seed(seed, 1_000_000 + episode)
}

fn publish(params: ApproximatorParams, version: u64) -> Arc<NetworkProvider> {
    Arc::new(NetworkProvider::new(Arc::new(params), version))
}

/// Runs the closed loop until `config.budget` tuples have been inserted.
/// The learner then finishes its remaining updates so the total is always
/// `budget * updates_per_tuple`.
pub fn closed_loop<E, L, F>(
    make_env: F,
    actor: &ActorConfig,
    learner: &mut L,
    config: &LoopConfig,
    on_eval: &mut EvalHook<'_>,
) -> Result<LoopOutcome>
where
    E: Environment,
    L: Learner,
    F: Fn(usize) -> E + Sync,
{
    config.validate()?;
    if config.single_thread {
        single_thread_loop(make_env, actor, learner, config, on_eval)
    } else {
        concurrent_loop(make_env, actor, learner, config, on_eval)
    }
}

/// Updates owed once `inserted` tuples exist; learning starts when the
/// buffer first holds a full batch.
fn owed_updates(config: &LoopConfig, batch: usize, inserted: u64) -> u64 {
    let usable = (inserted + 1).saturating_sub(batch as u64);
    usable * config.updates_per_tuple as u64
}

fn single_thread_loop<E, L, F>(
    make_env: F,
    actor: &ActorConfig,
    learner: &mut L,
    config: &LoopConfig,
    on_eval: &mut EvalHook<'_>,
) -> Result<LoopOutcome>
where
    E: Environment,
    L: Learner,
    F: Fn(usize) -> E,
{
    let mut env = make_env(0);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut version = 0;
    let mut provider = publish(learner.snapshot(), version);
    let mut out = LoopOutcome {
        observed_versions: vec![Vec::new()],
        ..Default::default()
    };
    let mut episode = 0u64;
    while buffer.inserted() < config.budget {
        let mut cfg = actor.clone();
        cfg.mode = config.actor_modes[episode as usize % config.actor_modes.len()];
        let mut runner = EpisodeRunner::new(&mut env, cfg, episode, episode_seed(config.seed, episode));
        while buffer.inserted() < config.budget {
            if runner.finished() {
                break;
            }
            out.observed_versions[0].push(provider.version());
            let tuple = match runner.step(&provider) {
                Ok(Some(t)) => t,
                Ok(None) => break,
                Err(e) => {
                    log::warn!("episode {episode} ended early: {e}");
                    runner.mark_partial();
                    break;
                }
            };
            buffer.insert(tuple);
            if config.eval_interval > 0 && buffer.inserted() % config.eval_interval == 0 {
                on_eval(buffer.inserted(), &learner.snapshot())?;
            }
            while out.updates < owed_updates(config, learner.batch_size(), buffer.inserted()) {
                out.stats.push(learner.update(&buffer)?);
                out.updates += 1;
                if learner.steps() % config.snapshot_interval == 0 {
                    version += 1;
                    provider = publish(learner.snapshot(), version);
                }
            }
        }
        out.episodes.push(runner.into_metrics());
        episode += 1;
    }
    out.inserted = buffer.inserted();
    out.final_version = version;
    out.buffer = Some(buffer);
    Ok(out)
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

struct ActorReport {
    episodes: Vec<EpisodeMetrics>,
    versions: Vec<u64>,
}

fn concurrent_loop<E, L, F>(
    make_env: F,
    actor: &ActorConfig,
    learner: &mut L,
    config: &LoopConfig,
    on_eval: &mut EvalHook<'_>,
) -> Result<LoopOutcome>
where
    E: Environment,
    L: Learner,
    F: Fn(usize) -> E + Sync,
{
    let buffer = Mutex::new(ReplayBuffer::new(config.buffer_capacity));
    let claimed = AtomicU64::new(0);
    let inserted = AtomicU64::new(0);
    let next_episode = AtomicU64::new(0);
    let stop = AtomicBool::new(false);
    let snapshot = RwLock::new(publish(learner.snapshot(), 0));
    let batch = learner.batch_size();

    let actor_body = |index: usize| -> ActorReport {
        let mut env = make_env(index);
        let mut cfg = actor.clone();
        cfg.mode = config.actor_modes[index % config.actor_modes.len()];
        let mut report = ActorReport {
            episodes: Vec::new(),
            versions: Vec::new(),
        };
        'episodes: while !stop.load(Ordering::Acquire) {
            let episode = next_episode.fetch_add(1, Ordering::AcqRel);
            let mut runner = EpisodeRunner::new(&mut env, cfg.clone(), episode, episode_seed(config.seed, episode));
            while !runner.finished() {
                if stop.load(Ordering::Acquire) || claimed.fetch_add(1, Ordering::AcqRel) >= config.budget {
                    report.episodes.push(runner.into_metrics());
                    break 'episodes;
                }
                let provider = Arc::clone(&snapshot.read().unwrap_or_else(|e| e.into_inner()));
                report.versions.push(provider.version());
                match runner.step(&provider) {
                    Ok(Some(t)) => {
                        lock(&buffer).insert(t);
                        inserted.fetch_add(1, Ordering::AcqRel);
                    }
                    Ok(None) => {
                        claimed.fetch_sub(1, Ordering::AcqRel);
                        break;
                    }
                    Err(e) => {
                        log::warn!("episode {episode} ended early: {e}");
                        claimed.fetch_sub(1, Ordering::AcqRel);
                        runner.mark_partial();
                        break;
                    }
                }
            }
            report.episodes.push(runner.into_metrics());
        }
        report
    };

    let mut out = LoopOutcome::default();
    let mut version = 0;
    let mut next_eval = config.eval_interval;
    let learner_result = std::thread::scope(|s| -> Result<Vec<ActorReport>> {
        let handles: Vec<_> = (0..config.actors).map(|i| s.spawn(move || actor_body(i))).collect();
        let result = (|| -> Result<()> {
            loop {
                let actors_done = handles.iter().all(|h| h.is_finished());
                let n = inserted.load(Ordering::Acquire);
                while config.eval_interval > 0 && next_eval <= n.min(config.budget) {
                    on_eval(next_eval, &learner.snapshot())?;
                    next_eval += config.eval_interval;
                }
                if out.updates < owed_updates(config, batch, n) {
                    out.stats.push(learner.update(&buffer)?);
                    out.updates += 1;
                    if learner.steps() % config.snapshot_interval == 0 {
                        version += 1;
                        *snapshot.write().unwrap_or_else(|e| e.into_inner()) = publish(learner.snapshot(), version);
                    }
                } else if actors_done {
                    return Ok(());
                } else {
                    std::thread::sleep(std::time::Duration::from_micros(200));
                }
            }
        })();
        if result.is_err() {
            stop.store(true, Ordering::Release);
        }
        let mut reports = Vec::new();
        for h in handles {
            reports.push(h.join().map_err(|_| LearnError::ActorPanicked)?);
        }
        result.map(|_| reports)
    });
    let reports = learner_result?;
    for r in reports {
        out.episodes.extend(r.episodes);
        out.observed_versions.push(r.versions);
    }
    out.episodes.sort_by_key(|m| m.episode);
    let buffer = buffer.into_inner().unwrap_or_else(|e| e.into_inner());
    out.inserted = buffer.inserted();
    out.final_version = version;
    out.buffer = Some(buffer);
    Ok(out)
}

/// Collects exactly `budget` tuples with a fixed provider, cutting the
/// last episode short if needed.
pub fn collect_dataset<E, P>(
    env: &mut E,
    actor: &ActorConfig,
    provider: &P,
    budget: u64,
    seed: u64,
) -> (Vec<ExperienceTuple>, Vec<EpisodeMetrics>)
where
    E: Environment,
    P: HeuristicProvider,
{
    let mut tuples = Vec::new();
    let mut episodes = Vec::new();
    let mut episode = 0u64;
    while (tuples.len() as u64) < budget {
        let mut runner = EpisodeRunner::new(env, actor.clone(), episode, episode_seed(seed, episode));
        while (tuples.len() as u64) < budget && !runner.finished() {
            match runner.step(provider) {
                Ok(Some(t)) => tuples.push(t),
                Ok(None) => break,
                Err(e) => {
                    log::warn!("episode {episode} ended early: {e}");
                    runner.mark_partial();
                }
            }
        }
        episodes.push(runner.into_metrics());
        episode += 1;
    }
    (tuples, episodes)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub updates: u64,
    pub policy_loss: f64,
    pub value_loss: f64,
}

/// Epochs of self-supervised updates over a frozen dataset. An epoch is
/// `ceil(len / batch)` updates. `on_epoch` sees the networks after each.
pub fn open_ssl_pipeline(
    learner: &mut SslLearner,
    dataset: &[ExperienceTuple],
    epochs: usize,
    on_epoch: &mut dyn FnMut(usize, &ApproximatorParams) -> Result<()>,
) -> Result<Vec<EpochStats>> {
    if epochs == 0 {
        return Ok(Vec::new());
    }
    let batch = learner.batch_size();
    if dataset.len() < batch {
        return Err(LearnError::BufferTooSmall {
            needed: batch,
            available: dataset.len(),
        });
    }
    let buffer = ReplayBuffer::from_tuples(dataset.len(), dataset.iter().cloned());
    let per_epoch = dataset.len().div_ceil(batch);
    let mut out = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let mut e = EpochStats {
            epoch,
            updates: per_epoch as u64,
            ..Default::default()
        };
        for _ in 0..per_epoch {
            let s = learner.update(&buffer)?;
            e.policy_loss += s.policy_loss;
            e.value_loss += s.value_loss;
        }
        e.policy_loss /= per_epoch as f64;
        e.value_loss /= per_epoch as f64;
        on_epoch(epoch, learner.params())?;
        out.push(e);
    }
    Ok(out)
}
