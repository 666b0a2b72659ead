//! Finite MDPs with exact and entropy-regularized value iteration.

/// A finite MDP given as dense tables.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    /// `transitions[s][a][s']`.
    pub transitions: Vec<Vec<Vec<f64>>>,
    /// `rewards[s][a]`.
    pub rewards: Vec<Vec<f64>>,
}

impl TabularMdp {
    pub fn state_count(&self) -> usize {
        self.rewards.len()
    }

    pub fn action_count(&self) -> usize {
        self.rewards.first().map_or(0, |r| r.len())
    }

    /// Deterministic next state of `(s, a)`, if the row is one-hot.
    pub fn deterministic_next(&self, s: usize, a: usize) -> Option<usize> {
        let row = &self.transitions[s][a];
        let idx = row.iter().position(|p| *p == 1.0)?;
        row.iter().enumerate().all(|(i, p)| i == idx || *p == 0.0).then_some(idx)
    }

    /// Two states, two actions, deterministic moves.
    ///
    /// In state 0, action 0 stays and pays 1; action 1 moves to state 1 and
    /// pays nothing. In state 1, action 0 returns to state 0 for nothing;
    /// action 1 stays and pays 2.
    pub fn two_state_toy() -> Self {
        Self {
            transitions: vec![
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            ],
            rewards: vec![vec![1.0, 0.0], vec![0.0, 2.0]],
        }
    }

    fn backup_q(&self, gamma: f64, v: &[f64]) -> Vec<Vec<f64>> {
        (0..self.state_count())
            .map(|s| {
                (0..self.action_count())
                    .map(|a| {
                        let ev: f64 = self.transitions[s][a].iter().zip(v).map(|(p, x)| p * x).sum();
                        self.rewards[s][a] + gamma * ev
                    })
                    .collect()
            })
            .collect()
    }
}

/// Result of exact value iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueIteration {
    pub values: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub iterations: usize,
}

/// Standard Bellman iteration from the pessimistic start
/// `min_r / (1 - gamma)`, stopping once the sup-norm change drops below
/// `tol`.
pub fn exact_value_iteration(mdp: &TabularMdp, gamma: f64, tol: f64) -> ValueIteration {
    let min_r = mdp.rewards.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let mut v = vec![min_r / (1.0 - gamma); mdp.state_count()];
    let mut iterations = 0;
    loop {
        let q = mdp.backup_q(gamma, &v);
        let next: Vec<f64> = q.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        iterations += 1;
        if delta < tol {
            return ValueIteration { values: v, q, iterations };
        }
    }
}

/// `alpha * log sum exp(q / alpha)`, computed stably.
pub fn soft_max_value(q: &[f64], alpha: f64) -> f64 {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = q.iter().map(|x| ((x - m) / alpha).exp()).sum();
    m + alpha * s.ln()
}

/// Softmax policy `exp(q / alpha) / Z` belonging to a soft Q row.
pub fn soft_policy(q: &[f64], alpha: f64) -> Vec<f64> {
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = q.iter().map(|x| ((x - m) / alpha).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Fixed point of the soft Bellman operator
/// `Q(s,a) = r(s,a) + gamma * E[alpha * log sum_a' exp(Q(s',a') / alpha)]`.
pub fn soft_value_iteration(mdp: &TabularMdp, gamma: f64, alpha: f64, tol: f64) -> Vec<Vec<f64>> {
    let mut q = vec![vec![0.0; mdp.action_count()]; mdp.state_count()];
    loop {
        let v: Vec<f64> = q.iter().map(|row| soft_max_value(row, alpha)).collect();
        let next = mdp.backup_q(gamma, &v);
        let delta = next
            .iter()
            .flatten()
            .zip(q.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        q = next;
        if delta < tol {
            return q;
        }
    }
}
