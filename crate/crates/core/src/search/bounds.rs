//! Scenario stepping and bound initialization.
//!
//! Both the search tree and the exhaustive oracle go through these
//! functions, so leaf values and Bellman arithmetic are identical between
//! them down to the bit.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::pomdp::{DiscountSpec, DomainModel};
use crate::reward::FactoredValue;
use crate::scenarios::ScenarioSet;

/// Child key: `None` collects scenarios that were already terminal.
pub type ObsKey<Z> = Option<Z>;

/// Outcome of applying one action to every scenario at a node.
#[derive(Debug, Clone)]
pub struct Branch<S, Z> {
    /// Scenario-averaged immediate reward. Terminal scenarios contribute 0.
    pub reward: FactoredValue,
    /// Children in ascending key order.
    pub children: Vec<BranchChild<S, Z>>,
}

#[derive(Debug, Clone)]
pub struct BranchChild<S, Z> {
    pub key: ObsKey<Z>,
    pub scenario_ids: Vec<usize>,
    pub states: Vec<S>,
}

/// Steps every scenario at a node of depth `depth` with `action`, grouping
/// the results by observation.
pub fn branch<M: DomainModel>(
    model: &M,
    scenarios: &ScenarioSet<M::State>,
    scenario_ids: &[usize],
    states: &[M::State],
    depth: usize,
    action: usize,
) -> Branch<M::State, M::Observation> {
    let mut groups: BTreeMap<ObsKey<M::Observation>, (Vec<usize>, Vec<M::State>)> = BTreeMap::new();
    let (mut safe, mut collision, mut total) = (0.0, 0.0, 0.0);
    for (&sid, state) in scenario_ids.iter().zip(states) {
        if model.is_terminal(state) {
            let g = groups.entry(None).or_default();
            g.0.push(sid);
            g.1.push(state.clone());
            continue;
        }
        let step = model.step(state, action, scenarios.get(sid).stream_value(depth + 1));
        safe += step.reward.safe;
        collision += step.reward.collision;
        total += step.reward.total();
        let g = groups.entry(Some(step.observation)).or_default();
        g.0.push(sid);
        g.1.push(step.state);
    }
    let n = scenario_ids.len() as f64;
    Branch {
        reward: FactoredValue {
            safe: safe / n,
            collision: collision / n,
            total: total / n,
        },
        children: groups
            .into_iter()
            .map(|(key, (scenario_ids, states))| BranchChild {
                key,
                scenario_ids,
                states,
            })
            .collect(),
    }
}

/// Discounted return of the default policy from `state` at `depth`,
/// following the scenario's stream until the rollout horizon.
pub fn rollout<M: DomainModel>(
    model: &M,
    scenarios: &ScenarioSet<M::State>,
    scenario_id: usize,
    state: &M::State,
    depth: usize,
    discount: &DiscountSpec,
) -> FactoredValue {
    let scenario = scenarios.get(scenario_id);
    let mut acc = FactoredValue::ZERO;
    let mut weight = 1.0;
    let mut current = state.clone();
    for d in depth + 1..=discount.max_horizon {
        if model.is_terminal(&current) {
            break;
        }
        let step = model.step(&current, model.default_action(&current), scenario.stream_value(d));
        acc.safe += weight * step.reward.safe;
        acc.collision += weight * step.reward.collision;
        acc.total += weight * step.reward.total();
        weight *= discount.gamma;
        current = step.state;
    }
    acc
}

/// Initial Monte Carlo bounds of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialBounds {
    pub lower: FactoredValue,
    pub upper: f64,
}

/// Scenario-averaged rollout lower bound and heuristic upper bound.
///
/// Nodes at the search depth are leaves of the finite-horizon problem; their
/// upper bound equals the rollout value. Nodes whose scenarios are all
/// terminal are worth exactly zero.
pub fn initial_bounds<M: DomainModel>(
    model: &M,
    scenarios: &ScenarioSet<M::State>,
    scenario_ids: &[usize],
    states: &[M::State],
    depth: usize,
    discount: &DiscountSpec,
) -> Result<InitialBounds> {
    let n = scenario_ids.len() as f64;
    let mut lower = FactoredValue::ZERO;
    let mut upper = 0.0;
    let mut all_terminal = true;
    for (&sid, state) in scenario_ids.iter().zip(states) {
        let r = rollout(model, scenarios, sid, state, depth, discount);
        lower.safe += r.safe;
        lower.collision += r.collision;
        lower.total += r.total;
        if !model.is_terminal(state) {
            all_terminal = false;
            upper += model.upper_bound(state);
        }
    }
    lower.safe /= n;
    lower.collision /= n;
    lower.total /= n;
    upper /= n;
    if all_terminal {
        return Ok(InitialBounds {
            lower: FactoredValue::ZERO,
            upper: 0.0,
        });
    }
    if depth >= discount.search_depth {
        upper = lower.total;
    }
    if upper < lower.total {
        return Err(Error::BoundInversion {
            depth,
            lower: lower.total,
            upper,
        });
    }
    Ok(InitialBounds { lower, upper })
}

/// Scenario-fraction weights of children with the given sizes.
pub fn child_fractions(parent_size: usize, child_sizes: impl Iterator<Item = usize>) -> Vec<f64> {
    let n = parent_size as f64;
    child_sizes.map(|c| c as f64 / n).collect()
}

/// `reward + gamma * sum_i frac_i * value_i`, the sampled Bellman operator
/// on a scalar.
#[inline]
pub fn bellman_scalar(reward: f64, gamma: f64, terms: impl Iterator<Item = (f64, f64)>) -> f64 {
    let mut acc = 0.0;
    for (frac, v) in terms {
        acc += frac * v;
    }
    reward + gamma * acc
}

/// Factored version of [`bellman_scalar`]; each factor and the total are
/// backed up independently.
pub fn bellman_factored(
    reward: &FactoredValue,
    gamma: f64,
    terms: impl Iterator<Item = (f64, FactoredValue)>,
) -> FactoredValue {
    let (mut s, mut c, mut t) = (0.0, 0.0, 0.0);
    for (frac, v) in terms {
        s += frac * v.safe;
        c += frac * v.collision;
        t += frac * v.total;
    }
    FactoredValue {
        safe: reward.safe + gamma * s,
        collision: reward.collision + gamma * c,
        total: reward.total + gamma * t,
    }
}
