//! Flat `key = value` run configuration.
//!
//! One setting per line; `#` starts a comment; blank lines are ignored.
//! Every key has a default, so an empty file is a valid configuration.
//! Lists are comma-separated.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | `domain` | `driving` | `driving` or `tiger` |
//! | `map` | built-in | driving lane-graph file |
//! | `seed` | `0` | master seed |
//! | `parallel` | `false` | data-parallel search, filtering and evaluation |
//! | `search.scenarios` | `20` | scenarios K |
//! | `search.depth` | `3` | search depth D |
//! | `search.max_horizon` | `20` | rollout horizon |
//! | `search.gamma` | `0.95` | discount |
//! | `search.trials` | `30` | trials per planning step (0 = unbounded) |
//! | `search.time_ms` | `0` | wall-clock budget per step (0 = none) |
//! | `search.exploration` | `1` | policy-prior bonus weight |
//! | `search.gap_tolerance` | `0` | early-stop root gap |
//! | `search.value_clipping` | `true` | clip value priors into the bounds |
//! | `search.threads` | `1` | concurrent trials |
//! | `actor.particles` | `100` | belief particles |
//! | `actor.max_steps` | `80` | episode step cap |
//! | `actor.modes` | mode default | actor modes, cycled |
//! | `actor.temperature` | `1` | explore-mode softmax temperature |
//! | `actors` | `3` | concurrent actors |
//! | `budget` | `10000` | unique tuples to collect |
//! | `buffer_capacity` | `100000` | replay capacity |
//! | `snapshot_interval` | `50` | learner steps between snapshots |
//! | `updates_per_tuple` | `1` | learner updates per tuple |
//! | `net.trunk` | `64,64` | hidden widths |
//! | `net.head_hidden` | `64` | policy head width |
//! | `net.value_scale` | `100` | value label divisor |
//! | `learner.batch_size` | `64` | |
//! | `learner.policy_lr` | `0.001` | |
//! | `learner.value_lr` | `0.001` | |
//! | `learner.q_lr` | `0.0003` | |
//! | `learner.alpha` | `0.2` | initial temperature (0 disables) |
//! | `learner.alpha_lr` | `0.0003` | |
//! | `learner.gamma` | `0.95` | soft Q discount |
//! | `learner.tau` | `0.005` | target averaging rate |
//! | `eval.interval` | `500` | tuples between evaluation points |
//! | `eval.episodes` | `20` | episodes per evaluation point |
//! | `eval.seed` | `7000000` | first evaluation episode seed |
//! | `episodes` | `20` | episodes for `plan` and `eval` |
//! | `epochs` | `10` | open-loop epochs |
//! | `dataset` | none | existing dataset for `train-open-ssl` |
//! | `checkpoint` | none | checkpoint for `plan` and `eval` |
//! | `oracle.seeds` | `50` | seeds per oracle configuration |
//! | `driving.exo_count` | `6` | exo-agents |
//! | `driving.p_attentive` | `0.5` | attentive probability |
//! | `driving.noise` | `0.05` | displacement noise sigma |
//! | `driving.default_policy` | `reactive` | `reactive` or `cruise` |

use std::path::PathBuf;
use std::time::Duration;

use guidedplan_core::{DiscountSpec, SearchConfig};
use guidedplan_driving::{DefaultPolicy, DrivingConfig};
use guidedplan_learn::{ActorConfig, ActorMode, LearnerConfig, LoopConfig};
use guidedplan_nn::NetworkConfig;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{source_name} line {line}: {message}")]
    Line {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("--set {index}: {message}")]
    Override { index: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Driving,
    Tiger,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: Domain,
    pub map: Option<PathBuf>,
    pub seed: u64,
    pub parallel: bool,
    pub search: SearchConfig,
    pub particles: usize,
    pub max_steps: usize,
    pub actor_modes: Option<Vec<ActorMode>>,
    pub temperature: f64,
    pub actors: usize,
    pub budget: u64,
    pub buffer_capacity: usize,
    pub snapshot_interval: u64,
    pub updates_per_tuple: usize,
    pub net: NetworkConfig,
    pub learner: LearnerConfig,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub eval_seed: u64,
    pub episodes: usize,
    pub epochs: usize,
    pub dataset: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub oracle_seeds: u64,
    pub driving: DrivingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: Domain::Driving,
            map: None,
            seed: 0,
            parallel: false,
            search: SearchConfig {
                scenario_count: 20,
                discount: DiscountSpec {
                    gamma: 0.95,
                    max_horizon: 20,
                    search_depth: 3,
                },
                max_trials: Some(30),
                time_budget: None,
                ..SearchConfig::default()
            },
            particles: 100,
            max_steps: 80,
            actor_modes: None,
            temperature: 1.0,
            actors: 3,
            budget: 10_000,
            buffer_capacity: guidedplan_learn::DEFAULT_CAPACITY,
            snapshot_interval: 50,
            updates_per_tuple: 1,
            net: NetworkConfig {
                trunk: vec![64, 64],
                head_hidden: 64,
                value_scale: 100.0,
            },
            learner: LearnerConfig {
                policy_lr: 1e-3,
                value_lr: 1e-3,
                ..LearnerConfig::default()
            },
            eval_interval: 500,
            eval_episodes: 20,
            eval_seed: 7_000_000,
            episodes: 20,
            epochs: 10,
            dataset: None,
            checkpoint: None,
            oracle_seeds: 50,
            driving: DrivingConfig::default(),
        }
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("expected a number, got `{v}`"))
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_num(s.trim())).collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "domain" => {
                self.domain = match v {
                    "driving" => Domain::Driving,
                    "tiger" => Domain::Tiger,
                    _ => return Err(format!("unknown domain `{v}`")),
                }
            }
            "map" => self.map = Some(PathBuf::from(v)),
            "seed" => self.seed = parse_num(v)?,
            "parallel" => self.parallel = parse_bool(v)?,
            "search.scenarios" => self.search.scenario_count = parse_num(v)?,
            "search.depth" => self.search.discount.search_depth = parse_num(v)?,
            "search.max_horizon" => self.search.discount.max_horizon = parse_num(v)?,
            "search.gamma" => self.search.discount.gamma = parse_num(v)?,
            "search.trials" => {
                let n: u64 = parse_num(v)?;
                self.search.max_trials = (n > 0).then_some(n);
            }
            "search.time_ms" => {
                let n: u64 = parse_num(v)?;
                self.search.time_budget = (n > 0).then(|| Duration::from_millis(n));
            }
            "search.exploration" => self.search.exploration = parse_num(v)?,
            "search.gap_tolerance" => self.search.gap_tolerance = parse_num(v)?,
            "search.value_clipping" => self.search.value_clipping = parse_bool(v)?,
            "search.threads" => self.search.threads = parse_num(v)?,
            "actor.particles" => self.particles = parse_num(v)?,
            "actor.max_steps" => self.max_steps = parse_num(v)?,
            "actor.modes" => {
                let modes = v
                    .split(',')
                    .map(|m| ActorMode::parse(m.trim()).ok_or_else(|| format!("unknown actor mode `{}`", m.trim())))
                    .collect::<Result<Vec<_>, _>>()?;
                self.actor_modes = Some(modes);
            }
            "actor.temperature" => self.temperature = parse_num(v)?,
            "actors" => self.actors = parse_num(v)?,
            "budget" => self.budget = parse_num(v)?,
            "buffer_capacity" => self.buffer_capacity = parse_num(v)?,
            "snapshot_interval" => self.snapshot_interval = parse_num(v)?,
            "updates_per_tuple" => self.updates_per_tuple = parse_num(v)?,
            "net.trunk" => self.net.trunk = parse_list(v)?,
            "net.head_hidden" => self.net.head_hidden = parse_num(v)?,
            "net.value_scale" => self.net.value_scale = parse_num(v)?,
            "learner.batch_size" => self.learner.batch_size = parse_num(v)?,
            "learner.policy_lr" => self.learner.policy_lr = parse_num(v)?,
            "learner.value_lr" => self.learner.value_lr = parse_num(v)?,
            "learner.q_lr" => self.learner.q_lr = parse_num(v)?,
            "learner.alpha" => self.learner.initial_alpha = parse_num(v)?,
            "learner.alpha_lr" => self.learner.alpha_lr = parse_num(v)?,
            "learner.gamma" => self.learner.gamma = parse_num(v)?,
            "learner.tau" => self.learner.tau = parse_num(v)?,
            "eval.interval" => self.eval_interval = parse_num(v)?,
            "eval.episodes" => self.eval_episodes = parse_num(v)?,
            "eval.seed" => self.eval_seed = parse_num(v)?,
            "episodes" => self.episodes = parse_num(v)?,
            "epochs" => self.epochs = parse_num(v)?,
            "dataset" => self.dataset = Some(PathBuf::from(v)),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(v)),
            "oracle.seeds" => self.oracle_seeds = parse_num(v)?,
            "driving.exo_count" => self.driving.exo_count = parse_num(v)?,
            "driving.p_attentive" => self.driving.p_attentive = parse_num(v)?,
            "driving.noise" => self.driving.noise_sigma = parse_num(v)?,
            "driving.default_policy" => {
                self.driving.default_policy = match v {
                    "reactive" => DefaultPolicy::Reactive,
                    "cruise" => DefaultPolicy::Cruise,
                    _ => return Err(format!("unknown default policy `{v}`")),
                }
            }
            k => return Err(format!("unknown key `{k}`")),
        }
        Ok(())
    }

    /// Applies a config file's text; `source_name` labels errors.
    pub fn apply_text(&mut self, text: &str, source_name: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ConfigError::Line {
                source_name: source_name.to_string(),
                line: i + 1,
                message,
            };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            self.set(k, v).map_err(err)?;
        }
        Ok(())
    }

    /// Applies `--set key=value` overrides in order, 1-based in errors.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        for (i, o) in overrides.iter().enumerate() {
            let err = |message: String| ConfigError::Override { index: i + 1, message };
            let (k, v) = o.split_once('=').ok_or_else(|| err(format!("expected key=value, got `{o}`")))?;
            self.set(k, v).map_err(err)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.search.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.learner.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.particles == 0 {
            return bad("actor.particles must be >= 1".into());
        }
        if self.max_steps == 0 {
            return bad("actor.max_steps must be >= 1".into());
        }
        if self.actors == 0 {
            return bad("actors must be >= 1".into());
        }
        if self.buffer_capacity == 0 || self.snapshot_interval == 0 {
            return bad("buffer_capacity and snapshot_interval must be >= 1".into());
        }
        if !(self.net.value_scale > 0.0) {
            return bad("net.value_scale must be positive".into());
        }
        if !(self.temperature > 0.0) {
            return bad("actor.temperature must be positive".into());
        }
        for (key, path) in [("map", &self.map), ("dataset", &self.dataset), ("checkpoint", &self.checkpoint)] {
            if let Some(p) = path {
                if !p.is_file() {
                    return bad(format!("{key}: no such file {}", p.display()));
                }
            }
        }
        Ok(())
    }

    pub fn actor(&self) -> ActorConfig {
        ActorConfig {
            mode: ActorMode::Exploit,
            search: self.search.clone(),
            particles: self.particles,
            max_steps: self.max_steps,
            parallel: self.parallel,
        }
    }

    pub fn modes_or(&self, default: &[ActorMode]) -> Vec<ActorMode> {
        let modes = self.actor_modes.clone().unwrap_or_else(|| default.to_vec());
        modes
            .into_iter()
            .map(|m| match m {
                ActorMode::Explore { .. } => ActorMode::Explore {
                    temperature: self.temperature,
                },
                m => m,
            })
            .collect()
    }

    pub fn loop_config(&self, modes: Vec<ActorMode>, single_thread: bool) -> LoopConfig {
        LoopConfig {
            budget: self.budget,
            updates_per_tuple: self.updates_per_tuple,
            actor_modes: modes,
            actors: self.actors,
            buffer_capacity: self.buffer_capacity,
            snapshot_interval: self.snapshot_interval,
            eval_interval: self.eval_interval,
            single_thread,
            seed: self.seed,
        }
    }

    /// Learner settings with the run seed and an entropy anneal over the
    /// first half of the budget's updates.
    pub fn learner_config(&self, total_updates: u64) -> LearnerConfig {
        LearnerConfig {
            entropy_anneal_steps: (total_updates / 2).max(1),
            parallel: self.parallel,
            seed: self.seed,
            ..self.learner.clone()
        }
    }

    /// Every key with its resolved value, in documentation order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |p: &Option<PathBuf>| p.as_ref().map_or("none".to_string(), |p| p.display().to_string());
        let s = &self.search;
        vec![
            ("domain", match self.domain {
                Domain::Driving => "driving".into(),
                Domain::Tiger => "tiger".into(),
            }),
            ("map", opt(&self.map)),
            ("seed", self.seed.to_string()),
            ("parallel", self.parallel.to_string()),
            ("search.scenarios", s.scenario_count.to_string()),
            ("search.depth", s.discount.search_depth.to_string()),
            ("search.max_horizon", s.discount.max_horizon.to_string()),
            ("search.gamma", s.discount.gamma.to_string()),
            ("search.trials", s.max_trials.unwrap_or(0).to_string()),
            ("search.time_ms", s.time_budget.map_or(0, |d| d.as_millis()).to_string()),
            ("search.exploration", s.exploration.to_string()),
            ("search.gap_tolerance", s.gap_tolerance.to_string()),
            ("search.value_clipping", s.value_clipping.to_string()),
            ("search.threads", s.threads.to_string()),
            ("actor.particles", self.particles.to_string()),
            ("actor.max_steps", self.max_steps.to_string()),
            ("actor.modes", self.actor_modes.as_ref().map_or("default".into(), |m| {
                m.iter().map(|m| m.name()).collect::<Vec<_>>().join(",")
            })),
            ("actor.temperature", self.temperature.to_string()),
            ("actors", self.actors.to_string()),
            ("budget", self.budget.to_string()),
            ("buffer_capacity", self.buffer_capacity.to_string()),
            ("snapshot_interval", self.snapshot_interval.to_string()),
            ("updates_per_tuple", self.updates_per_tuple.to_string()),
            ("net.trunk", join(&self.net.trunk)),
            ("net.head_hidden", self.net.head_hidden.to_string()),
            ("net.value_scale", self.net.value_scale.to_string()),
            ("learner.batch_size", self.learner.batch_size.to_string()),
            ("learner.policy_lr", self.learner.policy_lr.to_string()),
            ("learner.value_lr", self.learner.value_lr.to_string()),
            ("learner.q_lr", self.learner.q_lr.to_string()),
            ("learner.alpha", self.learner.initial_alpha.to_string()),
            ("learner.alpha_lr", self.learner.alpha_lr.to_string()),
            ("learner.gamma", self.learner.gamma.to_string()),
            ("learner.tau", self.learner.tau.to_string()),
            ("eval.interval", self.eval_interval.to_string()),
            ("eval.episodes", self.eval_episodes.to_string()),
            ("eval.seed", self.eval_seed.to_string()),
            ("episodes", self.episodes.to_string()),
            ("epochs", self.epochs.to_string()),
            ("dataset", opt(&self.dataset)),
            ("checkpoint", opt(&self.checkpoint)),
            ("oracle.seeds", self.oracle_seeds.to_string()),
            ("driving.exo_count", self.driving.exo_count.to_string()),
            ("driving.p_attentive", self.driving.p_attentive.to_string()),
            ("driving.noise", self.driving.noise_sigma.to_string()),
            ("driving.default_policy", match self.driving.default_policy {
                DefaultPolicy::Reactive => "reactive".into(),
                DefaultPolicy::Cruise => "cruise".into(),
            }),
        ]
    }
}
