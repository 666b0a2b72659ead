//! Generative POMDP models, beliefs, and Bayes filtering.

use std::fmt::Debug;
use std::hash::Hash;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::reward::FactoredReward;

/// Normalizers at or below this are treated as an impossible observation.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

/// Output of one generative simulation step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<S, Z> {
    pub state: S,
    pub observation: Z,
    pub reward: FactoredReward,
}

/// A POMDP given as a generative model.
///
/// `step` must be a pure function of `(state, action, seed)`: two calls with
/// the same arguments return bit-identical results. Everything the search
/// does to determinize the future rests on that.
pub trait DomainModel: Send + Sync {
    type State: Clone + Debug + Send + Sync;
    type Observation: Clone + Debug + Eq + Ord + Hash + Send + Sync;

    fn action_count(&self) -> usize;

    fn step(
        &self,
        state: &Self::State,
        action: usize,
        seed: u64,
    ) -> Step<Self::State, Self::Observation>;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Action taken by rollouts that initialize lower bounds.
    fn default_action(&self, state: &Self::State) -> usize;

    /// Upper bound on the optimal discounted value from `state`.
    fn upper_bound(&self, state: &Self::State) -> f64;

    /// Length of the vectors produced by [`DomainModel::encode_history`].
    fn feature_len(&self) -> usize;

    /// Encodes the most recent observation frames (oldest first) into a
    /// fixed-length feature vector.
    fn encode_history(&self, frames: &[Self::Observation]) -> Vec<f64>;

    /// Likelihood kernel used by the particle filter. Defaults to exact
    /// agreement of the discretized observations.
    fn observation_likelihood(&self, predicted: &Self::Observation, received: &Self::Observation) -> f64 {
        if predicted == received {
            1.0
        } else {
            0.0
        }
    }

    /// Folds the observable part of a received observation back into a
    /// propagated particle. Called by the particle filter after weighting;
    /// the default keeps the particle as predicted.
    fn assimilate(&self, predicted: Self::State, _observation: &Self::Observation, _seed: u64) -> Self::State {
        predicted
    }

    /// Expected one-step reward of `action` at `state`. The default draws a
    /// single fixed-seed sample, which is exact for deterministic rewards.
    fn mean_reward(&self, state: &Self::State, action: usize) -> FactoredReward {
        self.step(state, action, 0).reward
    }
}

/// Finite models that expose their full transition and observation tables.
pub trait Enumerable: DomainModel {
    fn states(&self) -> Vec<Self::State>;
    fn state_index(&self, state: &Self::State) -> usize;
    fn observations(&self) -> Vec<Self::Observation>;
    fn transition(&self, state: &Self::State, action: usize, next: &Self::State) -> f64;
    fn observation_prob(&self, next: &Self::State, action: usize, obs: &Self::Observation) -> f64;
    fn reward(&self, state: &Self::State, action: usize) -> FactoredReward;
}

/// Discounting and horizon settings shared by search and oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscountSpec {
    pub gamma: f64,
    /// Absolute depth at which rollouts stop.
    pub max_horizon: usize,
    /// Depth at which the belief tree stops branching.
    pub search_depth: usize,
}

impl Default for DiscountSpec {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            max_horizon: 30,
            search_depth: 10,
        }
    }
}

impl DiscountSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma {} outside [0, 1)", self.gamma)));
        }
        if self.search_depth < 1 {
            return Err(Error::InvalidConfig("search depth must be >= 1".into()));
        }
        if self.search_depth > self.max_horizon {
            return Err(Error::InvalidConfig(format!(
                "search depth {} exceeds horizon {}",
                self.search_depth, self.max_horizon
            )));
        }
        Ok(())
    }
}

/// A weighted particle list. Exact beliefs hold one particle per state.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief<S> {
    particles: Vec<(S, f64)>,
}

impl<S: Clone> Belief<S> {
    /// Builds a belief, normalizing the weights.
    pub fn new(particles: Vec<(S, f64)>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::EmptyBelief);
        }
        let mut sum = 0.0;
        for (_, w) in &particles {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidBelief(format!("weight {w}")));
            }
            sum += w;
        }
        if sum <= LIKELIHOOD_FLOOR {
            return Err(Error::InvalidBelief("weights sum to zero".into()));
        }
        let particles = particles.into_iter().map(|(s, w)| (s, w / sum)).collect();
        Ok(Self { particles })
    }

    pub fn uniform(states: Vec<S>) -> Result<Self> {
        Self::new(states.into_iter().map(|s| (s, 1.0)).collect())
    }

    pub fn point(state: S) -> Self {
        Self {
            particles: vec![(state, 1.0)],
        }
    }

    pub fn particles(&self) -> &[(S, f64)] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.particles.iter().map(|(_, w)| *w)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights().sum()
    }

    /// Highest-weight particle, lowest index on ties.
    pub fn mode(&self) -> &S {
        let mut best = 0;
        for (i, (_, w)) in self.particles.iter().enumerate() {
            if *w > self.particles[best].1 {
                best = i;
            }
        }
        &self.particles[best].0
    }

    pub(crate) fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(self.weights()).expect("belief weights are validated at construction")
    }
}

/// Exact Bayes filter over an enumerable model.
///
/// The belief must be exact, i.e. its particles are model states. The
/// result carries one entry per enumerated state, in model order.
pub fn exact_bayes_update<M: Enumerable>(
    belief: &Belief<M::State>,
    action: usize,
    observation: &M::Observation,
    model: &M,
) -> Result<Belief<M::State>> {
    let states = model.states();
    let mut weights = vec![0.0; states.len()];
    for (next_idx, next) in states.iter().enumerate() {
        let obs_p = model.observation_prob(next, action, observation);
        if obs_p == 0.0 {
            continue;
        }
        let mut predicted = 0.0;
        for (s, w) in belief.particles() {
            predicted += model.transition(s, action, next) * w;
        }
        weights[next_idx] = obs_p * predicted;
    }
    let eta: f64 = weights.iter().sum();
    if eta <= LIKELIHOOD_FLOOR {
        return Err(Error::ZeroLikelihood(eta));
    }
    let particles = states
        .into_iter()
        .zip(weights)
        .map(|(s, w)| (s, w / eta))
        .collect();
    Ok(Belief { particles })
}

/// Result of a particle filter update.
#[derive(Debug, Clone)]
pub struct ParticleUpdate<S> {
    pub belief: Belief<S>,
    /// Every propagated particle had zero likelihood; the belief was
    /// reinitialized uniformly over the propagated particles.
    pub depleted: bool,
}

/// Sampled Bayes filter: propagate, reweight by the model's likelihood
/// kernel, resample to `particle_count` equally weighted particles.
pub fn particle_bayes_update<M: DomainModel>(
    belief: &Belief<M::State>,
    action: usize,
    observation: &M::Observation,
    model: &M,
    particle_count: usize,
    seed: u64,
    parallel: bool,
) -> Result<ParticleUpdate<M::State>> {
    if belief.is_empty() {
        return Err(Error::EmptyBelief);
    }
    if particle_count == 0 {
        return Err(Error::InvalidConfig("particle count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = belief.sampler();
    let draws: Vec<(usize, u64)> = (0..particle_count)
        .map(|_| (sampler.sample(&mut rng), rng.next_u64()))
        .collect();
    let propagated = par::map(parallel, &draws, |&(idx, step_seed)| {
        let state = &belief.particles()[idx].0;
        let out = model.step(state, action, step_seed);
        let w = model.observation_likelihood(&out.observation, observation);
        (model.assimilate(out.state, observation, step_seed), w)
    });
    let total: f64 = propagated.iter().map(|(_, w)| *w).sum();
    let depleted = !(total > LIKELIHOOD_FLOOR);
    let weights: Vec<f64> = if depleted {
        vec![1.0; propagated.len()]
    } else {
        propagated.iter().map(|(_, w)| *w).collect()
    };
    let resampler = WeightedIndex::new(&weights).expect("nonnegative weights with positive sum");
    let uniform = 1.0 / particle_count as f64;
    let particles = (0..particle_count)
        .map(|_| (propagated[resampler.sample(&mut rng)].0.clone(), uniform))
        .collect();
    Ok(ParticleUpdate {
        belief: Belief { particles },
        depleted,
    })
}

/// Belief-weighted immediate reward; each factor is averaged on its own.
pub fn expected_immediate_reward<M: DomainModel>(
    belief: &Belief<M::State>,
    action: usize,
    model: &M,
) -> FactoredReward {
    let mut acc = FactoredReward::ZERO;
    for (s, w) in belief.particles() {
        acc += model.mean_reward(s, action).scale(*w);
    }
    acc
}
