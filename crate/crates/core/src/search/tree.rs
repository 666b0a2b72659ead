//! Sparse belief tree storage, expansion, and factored backup.

use crate::error::Result;
use crate::heuristics::{is_distribution, HeuristicProvider, ValuePrior};
use crate::par;
use crate::pomdp::DomainModel;
use crate::reward::FactoredValue;
use crate::scenarios::ScenarioSet;

use super::bounds::{self, InitialBounds, ObsKey};
use super::select;
use super::SearchConfig;

/// Number of observation frames fed to history encoders.
pub const HISTORY_FRAMES: usize = 4;

pub type NodeId = usize;
pub const ROOT: NodeId = 0;

#[derive(Debug, Clone)]
pub struct BeliefNode<S, Z> {
    pub depth: usize,
    pub scenario_ids: Vec<usize>,
    /// Current state of each scenario, parallel to `scenario_ids`.
    pub states: Vec<S>,
    /// Up to [`HISTORY_FRAMES`] most recent observations, oldest first.
    pub frames: Vec<Z>,
    pub features: Option<Vec<f64>>,
    /// Fraction of all scenarios that reach this node.
    pub weight: f64,
    pub lower: f64,
    pub upper: f64,
    pub value: FactoredValue,
    pub init: InitialBounds,
    pub visits: u64,
    pub prior: Option<Vec<f64>>,
    pub edges: Vec<ActionEdge<Z>>,
    /// Terminal or at the search depth; never expanded.
    pub frozen: bool,
    pub(crate) claimed: bool,
}

impl<S, Z> BeliefNode<S, Z> {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn weighted_gap(&self) -> f64 {
        self.weight * (self.upper - self.lower)
    }

    pub fn is_leaf(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ActionEdge<Z> {
    pub action: usize,
    /// Scenario-averaged immediate reward.
    pub reward: FactoredValue,
    pub lower: f64,
    pub upper: f64,
    pub value: FactoredValue,
    pub visits: u64,
    pub children: Vec<(ObsKey<Z>, NodeId)>,
}

/// Everything the search reads but never writes.
pub struct Ctx<'a, M: DomainModel, P> {
    pub model: &'a M,
    pub provider: &'a P,
    pub config: &'a SearchConfig,
    pub scenarios: &'a ScenarioSet<M::State>,
}

impl<M: DomainModel, P> Clone for Ctx<'_, M, P> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<M: DomainModel, P> Copy for Ctx<'_, M, P> {}

/// A node computed off-tree, ready to be inserted.
pub(crate) struct NodeProto<S, Z> {
    key: ObsKey<Z>,
    node: BeliefNode<S, Z>,
}

pub(crate) struct ExpansionInput<S, Z> {
    depth: usize,
    scenario_ids: Vec<usize>,
    states: Vec<S>,
    frames: Vec<Z>,
}

pub(crate) struct Expansion<S, Z> {
    edges: Vec<(FactoredValue, Vec<NodeProto<S, Z>>)>,
}

/// Builds a fresh node: initial bounds, history features, and the value
/// prior clipped into the bounds.
pub(crate) fn make_node<M, P>(
    ctx: Ctx<'_, M, P>,
    depth: usize,
    scenario_ids: Vec<usize>,
    states: Vec<M::State>,
    frames: Vec<M::Observation>,
) -> Result<BeliefNode<M::State, M::Observation>>
where
    M: DomainModel,
    P: HeuristicProvider,
{
    let discount = &ctx.config.discount;
    let init = bounds::initial_bounds(ctx.model, ctx.scenarios, &scenario_ids, &states, depth, discount)?;
    let all_terminal = states.iter().all(|s| ctx.model.is_terminal(s));
    let frozen = all_terminal || depth >= discount.search_depth;
    let features = if ctx.provider.needs_features() && !frozen {
        Some(ctx.model.encode_history(&frames))
    } else {
        None
    };
    let (l0, u0) = (init.lower.total, init.upper);
    let value = if frozen {
        init.lower
    } else {
        match ctx.provider.value_prior(features.as_deref().unwrap_or(&[])) {
            ValuePrior::Midpoint => init.lower.shifted_to(0.5 * (l0 + u0)),
            ValuePrior::Value(v) if !v.is_finite() => init.lower.shifted_to(0.5 * (l0 + u0)),
            ValuePrior::Value(v) if ctx.config.value_clipping => v.clipped(l0, u0),
            ValuePrior::Value(v) => v,
        }
    };
    let weight = scenario_ids.len() as f64 / ctx.scenarios.len() as f64;
    Ok(BeliefNode {
        depth,
        scenario_ids,
        states,
        frames,
        features,
        weight,
        lower: l0,
        upper: u0,
        value,
        init,
        visits: 0,
        prior: None,
        edges: Vec::new(),
        frozen,
        claimed: false,
    })
}

pub(crate) fn push_frame<Z: Clone>(frames: &[Z], z: Option<&Z>) -> Vec<Z> {
    let mut out: Vec<Z> = frames.to_vec();
    if let Some(z) = z {
        out.push(z.clone());
    }
    if out.len() > HISTORY_FRAMES {
        out.drain(..out.len() - HISTORY_FRAMES);
    }
    out
}

/// Applies every action to every scenario at a node and initializes the
/// resulting children. Pure with respect to the tree.
pub(crate) fn compute_expansion<M, P>(
    ctx: Ctx<'_, M, P>,
    input: &ExpansionInput<M::State, M::Observation>,
) -> Result<Expansion<M::State, M::Observation>>
where
    M: DomainModel,
    P: HeuristicProvider,
{
    let actions = ctx.model.action_count();
    let per_action = par::map_range(ctx.config.parallel, actions, |a| {
        let br = bounds::branch(ctx.model, ctx.scenarios, &input.scenario_ids, &input.states, input.depth, a);
        let mut children = Vec::with_capacity(br.children.len());
        for ch in br.children {
            let frames = push_frame(&input.frames, ch.key.as_ref());
            let node = make_node(ctx, input.depth + 1, ch.scenario_ids, ch.states, frames)?;
            children.push(NodeProto { key: ch.key, node });
        }
        Ok((br.reward, children))
    });
    let edges = per_action.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Expansion { edges })
}

/// The tree itself: an arena of belief nodes plus search counters.
#[derive(Debug, Clone)]
pub struct SearchTree<S, Z> {
    pub(crate) nodes: Vec<BeliefNode<S, Z>>,
    pub(crate) gamma: f64,
    pub(crate) clipping: bool,
    pub(crate) expansions: u64,
    pub(crate) max_depth: usize,
}

impl<S: Clone, Z: Clone> SearchTree<S, Z> {
    pub(crate) fn with_root(root: BeliefNode<S, Z>, gamma: f64, clipping: bool) -> Self {
        Self {
            nodes: vec![root],
            gamma,
            clipping,
            expansions: 0,
            max_depth: 0,
        }
    }

    pub fn nodes(&self) -> &[BeliefNode<S, Z>] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &BeliefNode<S, Z> {
        &self.nodes[id]
    }

    pub fn root(&self) -> &BeliefNode<S, Z> {
        &self.nodes[ROOT]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_gap(&self) -> f64 {
        self.nodes[ROOT].gap()
    }

    pub fn expansions(&self) -> u64 {
        self.expansions
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub(crate) fn expansion_input(&self, id: NodeId) -> ExpansionInput<S, Z> {
        let n = &self.nodes[id];
        ExpansionInput {
            depth: n.depth,
            scenario_ids: n.scenario_ids.clone(),
            states: n.states.clone(),
            frames: n.frames.clone(),
        }
    }

    pub(crate) fn apply_expansion(&mut self, id: NodeId, expansion: Expansion<S, Z>) {
        let mut edges = Vec::with_capacity(expansion.edges.len());
        for (action, (reward, protos)) in expansion.edges.into_iter().enumerate() {
            let mut children = Vec::with_capacity(protos.len());
            for proto in protos {
                let child = self.nodes.len();
                self.max_depth = self.max_depth.max(proto.node.depth);
                self.nodes.push(proto.node);
                children.push((proto.key, child));
            }
            edges.push(ActionEdge {
                action,
                reward,
                lower: 0.0,
                upper: 0.0,
                value: FactoredValue::ZERO,
                visits: 0,
                children,
            });
        }
        let node = &mut self.nodes[id];
        node.edges = edges;
        node.claimed = false;
        self.expansions += 1;
        for a in 0..self.nodes[id].edges.len() {
            self.refresh_edge(id, a);
        }
    }

    /// Recomputes an edge's bounds and value from its children.
    fn refresh_edge(&mut self, id: NodeId, action: usize) {
        let node = &self.nodes[id];
        let parent_size = node.scenario_ids.len() as f64;
        let edge = &node.edges[action];
        let (mut l, mut u) = (0.0, 0.0);
        let (mut vs, mut vc, mut vt) = (0.0, 0.0, 0.0);
        for (_, cid) in &edge.children {
            let c = &self.nodes[*cid];
            let frac = c.scenario_ids.len() as f64 / parent_size;
            l += frac * c.lower;
            u += frac * c.upper;
            vs += frac * c.value.safe;
            vc += frac * c.value.collision;
            vt += frac * c.value.total;
        }
        let g = self.gamma;
        let r = edge.reward;
        let edge = &mut self.nodes[id].edges[action];
        edge.lower = r.total + g * l;
        edge.upper = r.total + g * u;
        edge.value = FactoredValue {
            safe: r.safe + g * vs,
            collision: r.collision + g * vc,
            total: r.total + g * vt,
        };
    }

    /// Bellman backup of one node from its children.
    pub(crate) fn update_node(&mut self, id: NodeId) {
        if self.nodes[id].edges.is_empty() {
            return;
        }
        for a in 0..self.nodes[id].edges.len() {
            self.refresh_edge(id, a);
        }
        let clipping = self.clipping;
        let node = &mut self.nodes[id];
        let best_lower = node.edges.iter().map(|e| e.lower).fold(f64::NEG_INFINITY, f64::max);
        let best_upper = node.edges.iter().map(|e| e.upper).fold(f64::NEG_INFINITY, f64::max);
        node.lower = node.lower.max(best_lower);
        node.upper = node.upper.min(best_upper);
        if node.lower > node.upper {
            node.upper = node.lower;
        }
        let best = select::argmax(node.edges.iter().map(|e| e.value.total)).expect("expanded node has edges");
        let v = node.edges[best].value;
        node.value = if clipping { v.clipped(node.lower, node.upper) } else { v };
    }

    pub(crate) fn should_terminate(&self, id: NodeId, config: &SearchConfig) -> bool {
        let n = &self.nodes[id];
        n.frozen
            || n.depth >= config.discount.search_depth
            || n.weighted_gap() <= config.gap_tolerance * config.discount.gamma.powi(n.depth as i32)
    }

    pub(crate) fn choose_action<P: HeuristicProvider>(
        &mut self,
        id: NodeId,
        optimistic: bool,
        provider: &P,
        c: f64,
    ) -> usize {
        let actions = self.nodes[id].edges.len();
        let upper: Vec<f64> = self.nodes[id].edges.iter().map(|e| e.upper).collect();
        if optimistic || c == 0.0 {
            return select::select_action_optimistic(&upper);
        }
        if self.nodes[id].prior.is_none() {
            let node = &self.nodes[id];
            let mut p = provider.policy_prior(node.features.as_deref().unwrap_or(&[]));
            if p.len() != actions || !is_distribution(&p, 1e-6) {
                p = vec![1.0 / actions as f64; actions];
            }
            self.nodes[id].prior = Some(p);
        }
        let node = &self.nodes[id];
        let visits: Vec<u64> = node.edges.iter().map(|e| e.visits).collect();
        select::select_action_guided(&upper, node.prior.as_ref().unwrap(), node.visits, &visits, c)
    }

    pub(crate) fn choose_child(&self, id: NodeId, action: usize) -> NodeId {
        let edge = &self.nodes[id].edges[action];
        let gaps: Vec<f64> = edge.children.iter().map(|(_, c)| self.nodes[*c].weighted_gap()).collect();
        edge.children[select::select_observation(&gaps)].1
    }

    /// Backs up a traversed path (excluding the final node), bottom-up, and
    /// bumps visitation counts along it.
    pub(crate) fn backup_path(&mut self, path: &[(NodeId, usize)], last: NodeId) {
        self.nodes[last].visits += 1;
        for &(id, a) in path.iter().rev() {
            self.nodes[id].visits += 1;
            self.nodes[id].edges[a].visits += 1;
            self.update_node(id);
        }
    }

    /// Root action: best learned value, lowest index on ties.
    pub fn best_root_action(&self) -> Option<usize> {
        select::argmax(self.nodes[ROOT].edges.iter().map(|e| e.value.total))
    }

    /// Checks every structural and numeric invariant of the tree.
    ///
    /// With clipping on, `l <= v.total <= u` must hold exactly at every node
    /// and edge. Factor additivity must hold within `additivity_tol`.
    pub fn check_invariants(&self, additivity_tol: f64) -> std::result::Result<(), String> {
        for (id, n) in self.nodes.iter().enumerate() {
            if !(n.lower <= n.upper) {
                return Err(format!("node {id}: lower {} > upper {}", n.lower, n.upper));
            }
            if self.clipping && !(n.lower <= n.value.total && n.value.total <= n.upper) {
                return Err(format!(
                    "node {id}: value {} outside [{}, {}]",
                    n.value.total, n.lower, n.upper
                ));
            }
            if n.value.additivity_error() > additivity_tol {
                return Err(format!("node {id}: factor sum off by {}", n.value.additivity_error()));
            }
            if !(n.weight > 0.0 && n.weight <= 1.0) {
                return Err(format!("node {id}: weight {}", n.weight));
            }
            for e in &n.edges {
                if !(e.lower <= e.upper) {
                    return Err(format!("node {id} action {}: lower {} > upper {}", e.action, e.lower, e.upper));
                }
                if self.clipping && !(e.lower <= e.value.total && e.value.total <= e.upper) {
                    return Err(format!(
                        "node {id} action {}: value {} outside [{}, {}]",
                        e.action, e.value.total, e.lower, e.upper
                    ));
                }
                if e.value.additivity_error() > additivity_tol {
                    return Err(format!("node {id} action {}: factor sum off", e.action));
                }
                let count: usize = e.children.iter().map(|(_, c)| self.nodes[*c].scenario_ids.len()).sum();
                if count != n.scenario_ids.len() {
                    return Err(format!(
                        "node {id} action {}: children hold {count} of {} scenarios",
                        e.action,
                        n.scenario_ids.len()
                    ));
                }
                let w: f64 = e.children.iter().map(|(_, c)| self.nodes[*c].weight).sum();
                if (w - n.weight).abs() > 1e-12 {
                    return Err(format!("node {id} action {}: child weights {w} vs {}", e.action, n.weight));
                }
            }
        }
        Ok(())
    }
}
