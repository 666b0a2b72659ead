//! Online POMDP planning over determinized sparse belief trees, guided by
//! learned policy and value priors.
//!
//! The crate holds the domain-agnostic pieces: generative models and
//! beliefs ([`pomdp`]), determinized scenarios ([`scenarios`]), the anytime
//! tree search ([`search`]), the prior interface it consumes
//! ([`heuristics`]), and enumerable toy domains with brute-force oracles
//! ([`oracle`]).

pub mod env;
pub mod error;
pub mod heuristics;
pub mod oracle;
pub mod par;
pub mod pomdp;
pub mod reward;
pub mod scenarios;
pub mod search;

pub use error::{Error, Result};
pub use heuristics::{FeatureVector, FixedProvider, HeuristicProvider, UniformProvider, ValuePrior};
pub use pomdp::{
    exact_bayes_update, expected_immediate_reward, particle_bayes_update, Belief, DiscountSpec, DomainModel,
    Enumerable, ParticleUpdate, Step,
};
pub use reward::{FactoredReward, FactoredValue};
pub use scenarios::{sample_scenarios, step_scenario, Scenario, ScenarioSet};
pub use search::{run_search, run_search_with_scenarios, Fallback, Search, SearchConfig, SearchResult};
