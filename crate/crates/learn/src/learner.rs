//! Self-supervised and soft actor-critic learners.

use std::sync::Arc;

use guidedplan_nn::{
    loss_sac_policy, loss_sac_q, loss_ssl_policy, loss_ssl_value, Adam, ApproximatorParams, Checkpoint,
    EntropyController, EntropySchedule, Mlp, NetworkConfig, PolicySample, Transition, TwinQ, ValueSample,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::buffer::BatchSource;
use crate::error::{LearnError, Result};
use crate::tuple::ExperienceTuple;

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    pub batch_size: usize,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub q_lr: f64,
    /// Learning rates decay linearly to `final_lr_fraction` of their
    /// initial value over this many updates; 0 keeps them constant.
    pub lr_decay_steps: u64,
    pub final_lr_fraction: f64,
    /// Zero disables the entropy term and its controller.
    pub initial_alpha: f64,
    pub alpha_lr: f64,
    /// Updates over which the target entropy anneals.
    pub entropy_anneal_steps: u64,
    pub gamma: f64,
    pub tau: f64,
    pub parallel: bool,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            policy_lr: 3e-4,
            value_lr: 3e-4,
            q_lr: 3e-4,
            lr_decay_steps: 0,
            final_lr_fraction: 1.0,
            initial_alpha: 0.2,
            alpha_lr: 3e-4,
            entropy_anneal_steps: 5_000,
            gamma: 0.95,
            tau: 0.005,
            parallel: false,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(LearnError::InvalidConfig(m.into()));
        if self.batch_size == 0 {
            return bad("batch size must be >= 1");
        }
        if !(self.initial_alpha >= 0.0) {
            return bad("initial alpha must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        Ok(())
    }

    fn lr_scale(&self, step: u64) -> f64 {
        if self.lr_decay_steps == 0 {
            return 1.0;
        }
        let f = (step as f64 / self.lr_decay_steps as f64).min(1.0);
        1.0 + (self.final_lr_fraction - 1.0) * f
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    /// Summed twin Q loss; zero for the self-supervised learner.
    pub q_loss: f64,
    pub entropy: f64,
    pub alpha: f64,
}

/// A learner consuming replay batches and publishing planner priors.
pub trait Learner: Send {
    fn update(&mut self, source: &dyn BatchSource) -> Result<UpdateStats>;
    /// Current policy and value networks.
    fn snapshot(&self) -> ApproximatorParams;
    fn steps(&self) -> u64;
    fn batch_size(&self) -> usize;
    fn checkpoint(&self) -> Checkpoint;
    /// Optimizer steps skipped on non-finite gradients.
    fn skipped_steps(&self) -> u64;
}

struct Temperature {
    controller: Option<EntropyController>,
    schedule: EntropySchedule,
}

impl Temperature {
    fn new(config: &LearnerConfig, actions: usize) -> Self {
        let schedule = EntropySchedule::for_actions(actions, config.entropy_anneal_steps);
        Self {
            controller: (config.initial_alpha > 0.0)
                .then(|| EntropyController::new(config.initial_alpha, schedule.start, config.alpha_lr)),
            schedule,
        }
    }

    fn alpha(&self) -> f64 {
        self.controller.as_ref().map_or(0.0, |c| c.alpha())
    }

    fn update(&mut self, step: u64, entropy: f64) {
        if let Some(c) = &mut self.controller {
            c.target_entropy = self.schedule.target(step);
            c.update(entropy);
        }
    }
}

fn adam_step(opt: &mut Adam, lr: f64, params: &mut [f64], grads: &[f64]) {
    opt.lr = lr;
    if opt.step(params, grads).is_err() {
        log::warn!("non-finite gradient, optimizer step skipped");
    }
}

fn value_step(value: &mut Mlp, opt: &mut Adam, lr: f64, scale: f64, batch: &[Arc<ExperienceTuple>], parallel: bool) -> f64 {
    let samples: Vec<ValueSample> = batch
        .iter()
        .map(|t| ValueSample {
            x: &t.x,
            safe: t.value.safe / scale,
            collision: t.value.collision / scale,
        })
        .collect();
    let out = loss_ssl_value(value, &samples, parallel);
    adam_step(opt, lr, value.params_mut(), &out.grads);
    out.loss
}

/// Fits the policy to the planner's actions and the value heads to the
/// planner's root values.
pub struct SslLearner {
    config: LearnerConfig,
    params: ApproximatorParams,
    policy_opt: Adam,
    value_opt: Adam,
    temperature: Temperature,
    rng: ChaCha8Rng,
    steps: u64,
}

impl SslLearner {
    pub fn new(params: ApproximatorParams, config: LearnerConfig) -> Self {
        Self {
            policy_opt: Adam::new(params.policy.param_count(), config.policy_lr),
            value_opt: Adam::new(params.value.param_count(), config.value_lr),
            temperature: Temperature::new(&config, params.action_count()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            params,
            config,
            steps: 0,
        }
    }

    pub fn params(&self) -> &ApproximatorParams {
        &self.params
    }

    pub fn alpha(&self) -> f64 {
        self.temperature.alpha()
    }
}

/// One policy step and one value step on independent batches, then the
/// temperature update.
pub fn ssl_update(learner: &mut SslLearner, source: &dyn BatchSource) -> Result<UpdateStats> {
    let cfg = &learner.config;
    let policy_batch = source.sample_batch(cfg.batch_size, &mut learner.rng)?;
    let value_batch = source.sample_batch(cfg.batch_size, &mut learner.rng)?;
    let scale = cfg.lr_scale(learner.steps);
    let alpha = learner.temperature.alpha();
    let samples: Vec<PolicySample> = policy_batch
        .iter()
        .map(|t| PolicySample {
            x: &t.x,
            action: t.planner_action,
        })
        .collect();
    let p = loss_ssl_policy(&learner.params.policy, &samples, alpha, cfg.parallel);
    adam_step(
        &mut learner.policy_opt,
        cfg.policy_lr * scale,
        learner.params.policy.params_mut(),
        &p.grads,
    );
    let value_loss = value_step(
        &mut learner.params.value,
        &mut learner.value_opt,
        cfg.value_lr * scale,
        learner.params.value_scale,
        &value_batch,
        cfg.parallel,
    );
    learner.temperature.update(learner.steps, p.entropy);
    learner.steps += 1;
    Ok(UpdateStats {
        policy_loss: p.loss,
        value_loss,
        q_loss: 0.0,
        entropy: p.entropy,
        alpha,
    })
}

impl Learner for SslLearner {
    fn update(&mut self, source: &dyn BatchSource) -> Result<UpdateStats> {
        ssl_update(self, source)
    }

    fn snapshot(&self) -> ApproximatorParams {
        self.params.clone()
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn batch_size(&self) -> usize {
        self.config.batch_size
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            step: self.steps,
            params: self.params.clone(),
            q: None,
            alpha: Some(self.alpha()),
        }
    }

    fn skipped_steps(&self) -> u64 {
        self.policy_opt.skipped() + self.value_opt.skipped()
    }
}

/// Discrete soft actor-critic on the smooth reward channel, with a value
/// network trained on planner labels for guiding the search.
pub struct RlLearner {
    config: LearnerConfig,
    params: ApproximatorParams,
    q: TwinQ,
    policy_opt: Adam,
    value_opt: Adam,
    q_opts: [Adam; 2],
    temperature: Temperature,
    rng: ChaCha8Rng,
    steps: u64,
}

impl RlLearner {
    pub fn new(params: ApproximatorParams, q: TwinQ, config: LearnerConfig) -> Self {
        Self {
            policy_opt: Adam::new(params.policy.param_count(), config.policy_lr),
            value_opt: Adam::new(params.value.param_count(), config.value_lr),
            q_opts: [
                Adam::new(q.online[0].param_count(), config.q_lr),
                Adam::new(q.online[1].param_count(), config.q_lr),
            ],
            temperature: Temperature::new(&config, params.action_count()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            params,
            q,
            config,
            steps: 0,
        }
    }

    pub fn with_networks(input: usize, actions: usize, net: &NetworkConfig, config: LearnerConfig) -> Self {
        let params = ApproximatorParams::new(input, actions, net, config.seed);
        let q = TwinQ::new(input, actions, net, config.seed ^ 0x51);
        Self::new(params, q, config)
    }

    pub fn params(&self) -> &ApproximatorParams {
        &self.params
    }

    pub fn q(&self) -> &TwinQ {
        &self.q
    }

    pub fn alpha(&self) -> f64 {
        self.temperature.alpha()
    }
}

/// Soft Q step, policy step against the updated critics, temperature
/// update, target averaging, then a value step on planner labels.
pub fn rl_update(learner: &mut RlLearner, source: &dyn BatchSource) -> Result<UpdateStats> {
    let cfg = &learner.config;
    let batch = source.sample_batch(cfg.batch_size, &mut learner.rng)?;
    let value_batch = source.sample_batch(cfg.batch_size, &mut learner.rng)?;
    let scale = cfg.lr_scale(learner.steps);
    let alpha = learner.temperature.alpha();
    let transitions: Vec<Transition> = batch
        .iter()
        .map(|t| Transition {
            x: &t.x,
            action: t.action,
            reward: t.rl_reward,
            next_x: &t.next_x,
            done: t.done,
        })
        .collect();
    let ql = loss_sac_q(&learner.q, &learner.params.policy, &transitions, alpha, cfg.gamma, cfg.parallel);
    for (i, g) in ql.grads.iter().enumerate() {
        adam_step(&mut learner.q_opts[i], cfg.q_lr * scale, learner.q.online[i].params_mut(), g);
    }
    let xs: Vec<&[f64]> = batch.iter().map(|t| t.x.as_slice()).collect();
    let qs: Vec<Vec<f64>> = xs.iter().map(|x| learner.q.online_min(x)).collect();
    let p = loss_sac_policy(&learner.params.policy, &xs, &qs, alpha, cfg.parallel);
    adam_step(
        &mut learner.policy_opt,
        cfg.policy_lr * scale,
        learner.params.policy.params_mut(),
        &p.grads,
    );
    learner.temperature.update(learner.steps, p.entropy);
    learner.q.polyak(cfg.tau);
    let value_loss = value_step(
        &mut learner.params.value,
        &mut learner.value_opt,
        cfg.value_lr * scale,
        learner.params.value_scale,
        &value_batch,
        cfg.parallel,
    );
    learner.steps += 1;
    Ok(UpdateStats {
        policy_loss: p.loss,
        value_loss,
        q_loss: ql.loss,
        entropy: p.entropy,
        alpha,
    })
}

impl Learner for RlLearner {
    fn update(&mut self, source: &dyn BatchSource) -> Result<UpdateStats> {
        rl_update(self, source)
    }

    fn snapshot(&self) -> ApproximatorParams {
        self.params.clone()
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn batch_size(&self) -> usize {
        self.config.batch_size
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            step: self.steps,
            params: self.params.clone(),
            q: Some(self.q.clone()),
            alpha: Some(self.alpha()),
        }
    }

    fn skipped_steps(&self) -> u64 {
        self.policy_opt.skipped() + self.value_opt.skipped() + self.q_opts.iter().map(|o| o.skipped()).sum::<u64>()
    }
}
