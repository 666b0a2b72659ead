//! Determinized scenarios.
//!
//! A scenario pairs a start state drawn from the belief with a random stream
//! that fixes the outcome of every simulated step. The stream value at depth
//! `i` is a counter-based hash of `(stream_seed, i)`, so any depth can be
//! read without replaying the ones before it.

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pomdp::{Belief, DomainModel, Step};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the `index`-th child seed of `seed`.
#[inline]
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Maps a 64-bit stream value to a uniform variate in `[0, 1)`.
#[inline]
pub fn unit_f64(value: u64) -> f64 {
    (value >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<S> {
    pub id: usize,
    pub initial_state: S,
    pub stream_seed: u64,
}

impl<S> Scenario<S> {
    /// Random value driving the step into depth `depth`.
    #[inline]
    pub fn stream_value(&self, depth: usize) -> u64 {
        derive_seed(self.stream_seed, depth as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet<S> {
    scenarios: Vec<Scenario<S>>,
}

impl<S: Clone> ScenarioSet<S> {
    /// Wraps explicit scenarios. Ids must be `0..K` in order.
    pub fn from_scenarios(scenarios: Vec<Scenario<S>>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::InvalidConfig("scenario set must be nonempty".into()));
        }
        for (i, sc) in scenarios.iter().enumerate() {
            if sc.id != i {
                return Err(Error::InvalidConfig(format!(
                    "scenario at position {i} has id {}",
                    sc.id
                )));
            }
        }
        Ok(Self { scenarios })
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn get(&self, id: usize) -> &Scenario<S> {
        &self.scenarios[id]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Scenario<S>> {
        self.scenarios.iter()
    }
}

/// Draws `k` scenarios with start states proportional to belief weights.
pub fn sample_scenarios<S: Clone>(belief: &Belief<S>, k: usize, master_seed: u64) -> Result<ScenarioSet<S>> {
    if k == 0 {
        return Err(Error::InvalidConfig("K must be >= 1".into()));
    }
    if belief.is_empty() {
        return Err(Error::EmptyBelief);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let sampler = belief.sampler();
    let scenarios = (0..k)
        .map(|id| Scenario {
            id,
            initial_state: belief.particles()[sampler.sample(&mut rng)].0.clone(),
            stream_seed: derive_seed(master_seed, id as u64),
        })
        .collect();
    Ok(ScenarioSet { scenarios })
}

/// One determinized step of `scenario` into depth `depth` (>= 1).
pub fn step_scenario<M: DomainModel>(
    scenario: &Scenario<M::State>,
    depth: usize,
    state: &M::State,
    action: usize,
    model: &M,
) -> Result<Step<M::State, M::Observation>> {
    if depth == 0 {
        return Err(Error::InvalidDepth(depth));
    }
    if model.is_terminal(state) {
        return Err(Error::TerminalState);
    }
    Ok(model.step(state, action, scenario.stream_value(depth)))
}
