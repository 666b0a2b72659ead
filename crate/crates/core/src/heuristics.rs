//! Policy and value priors consumed by the search.

use crate::reward::FactoredValue;

/// A fixed-length real feature vector describing a belief's recent history.
pub type FeatureVector = Vec<f64>;

/// Value prior for a freshly created node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValuePrior {
    /// No opinion: the search uses the midpoint of the node's initial bounds.
    Midpoint,
    Value(FactoredValue),
}

/// Source of the learned action prior and value prior.
///
/// A provider handed to a search is read-only for the lifetime of that
/// search and may be shared between concurrent trials.
pub trait HeuristicProvider: Send + Sync {
    fn action_count(&self) -> usize;

    /// Distribution over actions; nonnegative and summing to one.
    fn policy_prior(&self, features: &[f64]) -> Vec<f64>;

    fn value_prior(&self, features: &[f64]) -> ValuePrior;

    /// Providers that ignore features let the search skip encoding.
    fn needs_features(&self) -> bool {
        true
    }
}

impl<P: HeuristicProvider + ?Sized> HeuristicProvider for std::sync::Arc<P> {
    fn action_count(&self) -> usize {
        (**self).action_count()
    }
    fn policy_prior(&self, features: &[f64]) -> Vec<f64> {
        (**self).policy_prior(features)
    }
    fn value_prior(&self, features: &[f64]) -> ValuePrior {
        (**self).value_prior(features)
    }
    fn needs_features(&self) -> bool {
        (**self).needs_features()
    }
}

/// Cold-start provider: uniform policy, midpoint values.
#[derive(Debug, Clone, Copy)]
pub struct UniformProvider {
    action_count: usize,
}

impl UniformProvider {
    pub fn new(action_count: usize) -> Self {
        assert!(action_count >= 1, "action count must be >= 1");
        Self { action_count }
    }
}

impl HeuristicProvider for UniformProvider {
    fn action_count(&self) -> usize {
        self.action_count
    }

    fn policy_prior(&self, _features: &[f64]) -> Vec<f64> {
        vec![1.0 / self.action_count as f64; self.action_count]
    }

    fn value_prior(&self, _features: &[f64]) -> ValuePrior {
        ValuePrior::Midpoint
    }

    fn needs_features(&self) -> bool {
        false
    }
}

/// Provider returning the same prior everywhere. Mostly useful in tests.
#[derive(Debug, Clone)]
pub struct FixedProvider {
    pub policy: Vec<f64>,
    pub value: ValuePrior,
}

impl HeuristicProvider for FixedProvider {
    fn action_count(&self) -> usize {
        self.policy.len()
    }

    fn policy_prior(&self, _features: &[f64]) -> Vec<f64> {
        self.policy.clone()
    }

    fn value_prior(&self, _features: &[f64]) -> ValuePrior {
        self.value
    }

    fn needs_features(&self) -> bool {
        false
    }
}

/// Checks the distribution contract of a policy prior.
pub fn is_distribution(p: &[f64], tol: f64) -> bool {
    !p.is_empty() && p.iter().all(|x| x.is_finite() && *x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= tol
}
