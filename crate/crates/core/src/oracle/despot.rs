//! Exhaustive value of a determinized sparse tree.
//!
//! Expands every action and every sampled observation down to the search
//! depth, values depth-limit leaves with the same scenario rollouts the
//! search uses, and backs up with the same scenario-fraction Bellman
//! operator. Under identical scenarios this is exactly the value an
//! unlimited search converges to.

use crate::error::{Error, Result};
use crate::pomdp::{DiscountSpec, DomainModel};
use crate::scenarios::ScenarioSet;
use crate::search::bounds::{self, bellman_scalar};
use crate::search::select::argmax;

/// Default cap on `|A|^D * K`.
pub const NODE_STEP_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub action: usize,
    pub value: f64,
    pub action_values: Vec<f64>,
}

pub fn exhaustive_despot_value<M: DomainModel>(
    scenarios: &ScenarioSet<M::State>,
    model: &M,
    discount: &DiscountSpec,
) -> Result<OracleResult> {
    discount.validate()?;
    let required = (model.action_count() as u128)
        .checked_pow(discount.search_depth as u32)
        .and_then(|x| x.checked_mul(scenarios.len() as u128))
        .unwrap_or(u128::MAX);
    if required > NODE_STEP_LIMIT {
        return Err(Error::SizeGuard {
            required,
            limit: NODE_STEP_LIMIT,
        });
    }
    let ids: Vec<usize> = (0..scenarios.len()).collect();
    let states: Vec<M::State> = scenarios.iter().map(|s| s.initial_state.clone()).collect();
    if states.iter().all(|s| model.is_terminal(s)) {
        return Ok(OracleResult {
            action: model.default_action(&states[0]),
            value: 0.0,
            action_values: Vec::new(),
        });
    }
    let action_values = action_values(model, scenarios, &ids, &states, 0, discount)?;
    let action = argmax(action_values.iter().copied()).expect("model has actions");
    Ok(OracleResult {
        action,
        value: action_values[action],
        action_values,
    })
}

fn action_values<M: DomainModel>(
    model: &M,
    scenarios: &ScenarioSet<M::State>,
    ids: &[usize],
    states: &[M::State],
    depth: usize,
    discount: &DiscountSpec,
) -> Result<Vec<f64>> {
    (0..model.action_count())
        .map(|a| {
            let br = bounds::branch(model, scenarios, ids, states, depth, a);
            let n = ids.len() as f64;
            let mut terms = Vec::with_capacity(br.children.len());
            for ch in &br.children {
                let v = node_value(model, scenarios, &ch.scenario_ids, &ch.states, depth + 1, discount)?;
                terms.push((ch.scenario_ids.len() as f64 / n, v));
            }
            Ok(bellman_scalar(br.reward.total, discount.gamma, terms.into_iter()))
        })
        .collect()
}

fn node_value<M: DomainModel>(
    model: &M,
    scenarios: &ScenarioSet<M::State>,
    ids: &[usize],
    states: &[M::State],
    depth: usize,
    discount: &DiscountSpec,
) -> Result<f64> {
    let init = bounds::initial_bounds(model, scenarios, ids, states, depth, discount)?;
    let all_terminal = states.iter().all(|s| model.is_terminal(s));
    if all_terminal || depth >= discount.search_depth {
        return Ok(init.lower.total);
    }
    let q = action_values(model, scenarios, ids, states, depth, discount)?;
    Ok(q.into_iter().fold(f64::NEG_INFINITY, f64::max))
}
