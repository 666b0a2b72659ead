//! Action and observation selection rules. Ties go to the lowest index.

/// Index of the largest value, lowest index on ties. `None` when empty.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let better = match best {
            None => true,
            Some((_, b)) => v > b || (b.is_nan() && !v.is_nan()),
        };
        if better {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Optimistic rule: the action with the highest upper bound.
pub fn select_action_optimistic(upper: &[f64]) -> usize {
    argmax(upper.iter().copied()).expect("node has at least one action")
}

/// Prior-guided rule: upper bound plus a count-scaled policy bonus,
/// `u(b,a) + c * prior(a) * sqrt(N(b) / (N(b,a) + 1))`.
pub fn select_action_guided(upper: &[f64], prior: &[f64], node_visits: u64, edge_visits: &[u64], c: f64) -> usize {
    debug_assert_eq!(upper.len(), prior.len());
    debug_assert_eq!(upper.len(), edge_visits.len());
    let n = node_visits as f64;
    argmax(
        upper
            .iter()
            .zip(prior)
            .zip(edge_visits)
            .map(|((u, p), na)| guided_score(*u, *p, n, *na, c)),
    )
    .expect("node has at least one action")
}

#[inline]
pub fn guided_score(upper: f64, prior: f64, node_visits: f64, edge_visits: u64, c: f64) -> f64 {
    if c == 0.0 || node_visits == 0.0 {
        return upper;
    }
    upper + c * prior * (node_visits / (edge_visits as f64 + 1.0)).sqrt()
}

/// Child with the largest weighted gap `weight * (upper - lower)`.
pub fn select_observation(weighted_gaps: &[f64]) -> usize {
    argmax(weighted_gaps.iter().copied()).expect("edge has at least one child")
}
