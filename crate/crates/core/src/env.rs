//! The environment an actor plays in, as opposed to the model it plans with.

use crate::pomdp::{Belief, DomainModel};
use crate::reward::FactoredReward;

/// Per-step measurements for driving-style metrics. Domains without a
/// notion of speed or collisions leave the defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub speed: f64,
    pub ttc: f64,
    pub near_miss: bool,
    pub collision: bool,
}

impl Default for StepMetrics {
    fn default() -> Self {
        Self {
            speed: 0.0,
            ttc: f64::INFINITY,
            near_miss: false,
            collision: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeStart<S, Z> {
    pub belief: Belief<S>,
    /// Domains that observe nothing before the first action give `None`.
    pub observation: Option<Z>,
}

#[derive(Debug, Clone)]
pub struct EnvStep<Z> {
    pub observation: Z,
    pub reward: FactoredReward,
    /// Shaped reward for policy-gradient learners.
    pub rl_reward: f64,
    pub done: bool,
    pub metrics: StepMetrics,
}

/// A simulator holding the true state. Deterministic given the reset seed
/// and the action sequence.
pub trait Environment {
    type Model: DomainModel;

    fn model(&self) -> &Self::Model;

    fn reset(
        &mut self,
        seed: u64,
    ) -> EpisodeStart<<Self::Model as DomainModel>::State, <Self::Model as DomainModel>::Observation>;

    fn step(&mut self, action: usize) -> EnvStep<<Self::Model as DomainModel>::Observation>;
}
