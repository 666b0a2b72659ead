//! Anytime guided belief-tree search.
//!
//! Each trial walks from the root down a single path, picking actions by
//! upper bound plus a policy-prior bonus (or by upper bound alone on
//! optimistic trials) and observations by weighted remaining gap. Leaves
//! are expanded over all actions and the sampled observations, children get
//! rollout lower bounds, heuristic upper bounds, and a clipped value prior,
//! and the path is backed up to the root.

pub mod bounds;
mod concurrent;
pub mod select;
pub mod tree;

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::heuristics::HeuristicProvider;
use crate::pomdp::{Belief, DiscountSpec, DomainModel};
use crate::reward::FactoredValue;
use crate::scenarios::{sample_scenarios, ScenarioSet};

pub use tree::{ActionEdge, BeliefNode, NodeId, SearchTree, HISTORY_FRAMES, ROOT};

use tree::Ctx;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Number of sampled scenarios K.
    pub scenario_count: usize,
    pub discount: DiscountSpec,
    /// Weight c of the policy-prior bonus.
    pub exploration: f64,
    /// Root gap at which the search stops early.
    pub gap_tolerance: f64,
    pub max_trials: Option<u64>,
    pub time_budget: Option<Duration>,
    /// Every n-th trial selects actions by upper bound alone.
    pub optimistic_trial_period: u64,
    /// Trial cap applied when neither trials nor time are bounded.
    pub trial_guard: u64,
    pub value_clipping: bool,
    /// Concurrent trials; 1 runs the single-threaded reference search.
    pub threads: usize,
    /// Fan out scenario stepping and rollouts with rayon.
    pub parallel: bool,
    /// Record the root gap after every trial.
    pub record_gaps: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            scenario_count: 100,
            discount: DiscountSpec::default(),
            exploration: 1.0,
            gap_tolerance: 0.0,
            max_trials: None,
            time_budget: Some(Duration::from_millis(300)),
            optimistic_trial_period: 10,
            trial_guard: 100_000,
            value_clipping: true,
            threads: 1,
            parallel: false,
            record_gaps: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        self.discount.validate()?;
        if self.scenario_count == 0 {
            return Err(Error::InvalidConfig("scenario count must be >= 1".into()));
        }
        if self.optimistic_trial_period == 0 {
            return Err(Error::InvalidConfig("optimistic trial period must be >= 1".into()));
        }
        if !(self.exploration >= 0.0) || !self.exploration.is_finite() {
            return Err(Error::InvalidConfig(format!("exploration constant {}", self.exploration)));
        }
        if !(self.gap_tolerance >= 0.0) {
            return Err(Error::InvalidConfig(format!("gap tolerance {}", self.gap_tolerance)));
        }
        if self.threads == 0 {
            return Err(Error::InvalidConfig("threads must be >= 1".into()));
        }
        Ok(())
    }
}

/// Why the search returned without a tree-derived decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fallback {
    /// No trial completed; the action maximizes the clipped prior values of
    /// the root's children.
    NoTrials,
    /// Zero time budget; the default policy's action at the belief mode.
    BudgetZero,
    /// Every scenario at the root is terminal.
    TerminalRoot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub action: usize,
    /// Learned factored value at the root.
    pub value: FactoredValue,
    pub lower: f64,
    pub upper: f64,
    /// Root gap `upper - lower`.
    pub gap: f64,
    /// Learned value of each root action.
    pub action_values: Vec<f64>,
    pub trials: u64,
    pub nodes: usize,
    pub expansions: u64,
    pub max_depth: usize,
    pub fallback: Option<Fallback>,
    /// Root gap after initialization and after each trial, when recorded.
    pub gap_trace: Vec<f64>,
}

/// A search in progress over a fixed scenario set.
pub struct Search<'a, M: DomainModel, P> {
    ctx: Ctx<'a, M, P>,
    tree: SearchTree<M::State, M::Observation>,
    trials: u64,
    start: Instant,
    gap_trace: Vec<f64>,
}

impl<'a, M, P> Search<'a, M, P>
where
    M: DomainModel,
    P: HeuristicProvider,
{
    /// Creates the root from the scenarios' start states, initializes it,
    /// and expands it once.
    pub fn new(
        scenarios: &'a ScenarioSet<M::State>,
        history: &[M::Observation],
        config: &'a SearchConfig,
        provider: &'a P,
        model: &'a M,
    ) -> Result<Self> {
        let start = Instant::now();
        config.validate()?;
        if provider.action_count() != model.action_count() {
            return Err(Error::InvalidConfig(format!(
                "provider has {} actions, model has {}",
                provider.action_count(),
                model.action_count()
            )));
        }
        let ctx = Ctx {
            model,
            provider,
            config,
            scenarios,
        };
        let ids: Vec<usize> = (0..scenarios.len()).collect();
        let states: Vec<M::State> = scenarios.iter().map(|s| s.initial_state.clone()).collect();
        let frames = tree::push_frame(history, None);
        let root = tree::make_node(ctx, 0, ids, states, frames)?;
        let mut tree = SearchTree::with_root(root, config.discount.gamma, config.value_clipping);
        if !tree.root().frozen {
            let input = tree.expansion_input(ROOT);
            let expansion = tree::compute_expansion(ctx, &input)?;
            tree.apply_expansion(ROOT, expansion);
            tree.update_node(ROOT);
        }
        let mut gap_trace = Vec::new();
        if config.record_gaps {
            gap_trace.push(tree.root_gap());
        }
        Ok(Self {
            ctx,
            tree,
            trials: 0,
            start,
            gap_trace,
        })
    }

    pub fn tree(&self) -> &SearchTree<M::State, M::Observation> {
        &self.tree
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn root_gap(&self) -> f64 {
        self.tree.root_gap()
    }

    fn next_is_optimistic(&self) -> bool {
        (self.trials + 1) % self.ctx.config.optimistic_trial_period == 0
    }

    /// Runs one trial: descend, expand leaves on the way, back up.
    pub fn run_trial(&mut self) -> Result<()> {
        let optimistic = self.next_is_optimistic();
        self.run_trial_with(optimistic)
    }

    pub fn run_trial_with(&mut self, optimistic: bool) -> Result<()> {
        let ctx = self.ctx;
        let mut path: Vec<(NodeId, usize)> = Vec::new();
        let mut id = ROOT;
        while !self.tree.should_terminate(id, ctx.config) {
            if self.tree.node(id).is_leaf() {
                let input = self.tree.expansion_input(id);
                let expansion = tree::compute_expansion(ctx, &input)?;
                self.tree.apply_expansion(id, expansion);
            }
            let a = self.tree.choose_action(id, optimistic, ctx.provider, ctx.config.exploration);
            let child = self.tree.choose_child(id, a);
            path.push((id, a));
            id = child;
        }
        self.tree.backup_path(&path, id);
        self.trials += 1;
        if ctx.config.record_gaps {
            self.gap_trace.push(self.tree.root_gap());
        }
        Ok(())
    }

    fn budget_left(&self) -> bool {
        let cfg = self.ctx.config;
        if let Some(max) = cfg.max_trials {
            if self.trials >= max {
                return false;
            }
        }
        if let Some(t) = cfg.time_budget {
            if self.start.elapsed() >= t {
                return false;
            }
        }
        if cfg.max_trials.is_none() && cfg.time_budget.is_none() && self.trials >= cfg.trial_guard {
            return false;
        }
        true
    }

    fn converged(&self) -> bool {
        self.tree.root_gap() <= self.ctx.config.gap_tolerance
    }

    /// Runs trials until the budget is spent or the root gap closes.
    pub fn run(mut self) -> Result<SearchResult> {
        if self.ctx.config.threads > 1 {
            let (tree, trials) = concurrent::run(self.ctx, self.tree, self.start)?;
            self.tree = tree;
            self.trials = trials;
        } else {
            while !self.tree.root().frozen && !self.converged() && self.budget_left() {
                self.run_trial()?;
            }
        }
        Ok(self.result())
    }

    /// Snapshot of the current decision.
    pub fn result(&self) -> SearchResult {
        let root = self.tree.root();
        let (action, fallback) = match self.tree.best_root_action() {
            Some(a) if self.trials > 0 => (a, None),
            Some(a) => (a, Some(Fallback::NoTrials)),
            None => {
                let s = &root.states[0];
                (self.ctx.model.default_action(s), Some(Fallback::TerminalRoot))
            }
        };
        SearchResult {
            action,
            value: root.value,
            lower: root.lower,
            upper: root.upper,
            gap: root.gap(),
            action_values: root.edges.iter().map(|e| e.value.total).collect(),
            trials: self.trials,
            nodes: self.tree.len(),
            expansions: self.tree.expansions(),
            max_depth: self.tree.max_depth(),
            fallback,
            gap_trace: self.gap_trace.clone(),
        }
    }
}

/// Plans from `belief`: samples K scenarios from `seed` and searches.
///
/// `history` holds the most recent real observations, oldest first.
pub fn run_search<M, P>(
    belief: &Belief<M::State>,
    history: &[M::Observation],
    config: &SearchConfig,
    provider: &P,
    model: &M,
    seed: u64,
) -> Result<SearchResult>
where
    M: DomainModel,
    P: HeuristicProvider,
{
    if belief.is_empty() {
        return Err(Error::EmptyBelief);
    }
    if config.time_budget == Some(Duration::ZERO) {
        let action = model.default_action(belief.mode());
        return Ok(SearchResult {
            action,
            value: FactoredValue::ZERO,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            gap: f64::INFINITY,
            action_values: Vec::new(),
            trials: 0,
            nodes: 0,
            expansions: 0,
            max_depth: 0,
            fallback: Some(Fallback::BudgetZero),
            gap_trace: Vec::new(),
        });
    }
    let scenarios = sample_scenarios(belief, config.scenario_count, seed)?;
    run_search_with_scenarios(&scenarios, history, config, provider, model)
}

/// Searches over an explicit scenario set.
pub fn run_search_with_scenarios<M, P>(
    scenarios: &ScenarioSet<M::State>,
    history: &[M::Observation],
    config: &SearchConfig,
    provider: &P,
    model: &M,
) -> Result<SearchResult>
where
    M: DomainModel,
    P: HeuristicProvider,
{
    Search::new(scenarios, history, config, provider, model)?.run()
}
