//! Concurrent trials over one shared tree.
//!
//! Workers hold the tree lock while descending and backing up, and drop it
//! while expanding a leaf (scenario stepping and rollouts dominate the
//! cost). A leaf being expanded is claimed; other workers end their trial
//! there and back up what they have. Backups are serialized, so the bound
//! clamps keep the root gap non-increasing exactly as in single-threaded
//! mode.

use std::sync::Mutex;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::heuristics::HeuristicProvider;
use crate::pomdp::DomainModel;

use super::tree::{self, Ctx, NodeId, SearchTree, ROOT};

struct Shared<S, Z> {
    tree: SearchTree<S, Z>,
    started: u64,
    completed: u64,
    error: Option<Error>,
}

pub(super) fn run<M, P>(
    ctx: Ctx<'_, M, P>,
    tree: SearchTree<M::State, M::Observation>,
    start: Instant,
) -> Result<(SearchTree<M::State, M::Observation>, u64)>
where
    M: DomainModel,
    P: HeuristicProvider,
{
    let shared = Mutex::new(Shared {
        tree,
        started: 0,
        completed: 0,
        error: None,
    });
    std::thread::scope(|scope| {
        for _ in 0..ctx.config.threads {
            scope.spawn(|| worker(ctx, &shared, start));
        }
    });
    let shared = shared.into_inner().expect("worker panicked");
    if let Some(e) = shared.error {
        return Err(e);
    }
    Ok((shared.tree, shared.completed))
}

fn should_stop<S: Clone, Z: Clone>(sh: &Shared<S, Z>, cfg: &super::SearchConfig, start: Instant) -> bool {
    if sh.error.is_some() || sh.tree.root().frozen || sh.tree.root_gap() <= cfg.gap_tolerance {
        return true;
    }
    if let Some(max) = cfg.max_trials {
        if sh.started >= max {
            return true;
        }
    }
    if let Some(t) = cfg.time_budget {
        if start.elapsed() >= t {
            return true;
        }
    }
    cfg.max_trials.is_none() && cfg.time_budget.is_none() && sh.started >= cfg.trial_guard
}

fn worker<M, P>(ctx: Ctx<'_, M, P>, shared: &Mutex<Shared<M::State, M::Observation>>, start: Instant)
where
    M: DomainModel,
    P: HeuristicProvider,
{
    loop {
        let mut guard = shared.lock().expect("tree lock poisoned");
        if should_stop(&guard, ctx.config, start) {
            return;
        }
        guard.started += 1;
        let optimistic = guard.started % ctx.config.optimistic_trial_period == 0;
        let mut path: Vec<(NodeId, usize)> = Vec::new();
        let mut id = ROOT;
        loop {
            if guard.tree.should_terminate(id, ctx.config) {
                break;
            }
            if guard.tree.node(id).is_leaf() {
                if guard.tree.node(id).claimed {
                    break;
                }
                guard.tree.nodes[id].claimed = true;
                let input = guard.tree.expansion_input(id);
                drop(guard);
                let expansion = tree::compute_expansion(ctx, &input);
                guard = shared.lock().expect("tree lock poisoned");
                match expansion {
                    Ok(e) => guard.tree.apply_expansion(id, e),
                    Err(e) => {
                        guard.tree.nodes[id].claimed = false;
                        guard.error.get_or_insert(e);
                        return;
                    }
                }
            }
            let a = guard.tree.choose_action(id, optimistic, ctx.provider, ctx.config.exploration);
            let child = guard.tree.choose_child(id, a);
            path.push((id, a));
            id = child;
        }
        guard.tree.backup_path(&path, id);
        guard.completed += 1;
    }
}
