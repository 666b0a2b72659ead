//! Search priors backed by network snapshots.

use crate::mlp::softmax;
use crate::nets::{forward_value, scaled_value, ApproximatorParams};
use guidedplan_core::{HeuristicProvider, ValuePrior};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// An immutable parameter snapshot. Non-finite outputs fall back to the
/// uniform policy or the midpoint value and are counted.
#[derive(Debug)]
pub struct NetworkProvider {
    params: Arc<ApproximatorParams>,
    version: u64,
    non_finite: AtomicU64,
}

impl NetworkProvider {
    pub fn new(params: Arc<ApproximatorParams>, version: u64) -> Self {
        Self {
            params,
            version,
            non_finite: AtomicU64::new(0),
        }
    }

    pub fn params(&self) -> &ApproximatorParams {
        &self.params
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn non_finite_count(&self) -> u64 {
        self.non_finite.load(Ordering::Relaxed)
    }

    fn flag(&self) {
        self.non_finite.fetch_add(1, Ordering::Relaxed);
    }
}

pub fn network_provider(params: ApproximatorParams) -> NetworkProvider {
    NetworkProvider::new(Arc::new(params), 0)
}

impl HeuristicProvider for NetworkProvider {
    fn action_count(&self) -> usize {
        self.params.action_count()
    }

    fn policy_prior(&self, features: &[f64]) -> Vec<f64> {
        let p = softmax(&self.params.policy.forward(features));
        if p.iter().all(|v| v.is_finite()) {
            p
        } else {
            self.flag();
            vec![1.0 / p.len() as f64; p.len()]
        }
    }

    fn value_prior(&self, features: &[f64]) -> ValuePrior {
        let h = forward_value(&self.params, features);
        let finite = [h.mask_safe, h.mask_collision, h.safe, h.collision].iter().all(|v| v.is_finite());
        if finite {
            ValuePrior::Value(scaled_value(&h, self.params.value_scale))
        } else {
            self.flag();
            ValuePrior::Midpoint
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::NetworkConfig;

    #[test]
    fn non_finite_weights_fall_back() {
        let mut p = ApproximatorParams::zeros(3, 4, &NetworkConfig::default());
        p.policy.params_mut()[0] = f64::NAN;
        p.value.params_mut()[0] = f64::NAN;
        let prov = network_provider(p);
        assert_eq!(prov.policy_prior(&[1.0, 0.0, 0.0]), vec![0.25; 4]);
        assert_eq!(prov.value_prior(&[1.0, 0.0, 0.0]), ValuePrior::Midpoint);
        assert_eq!(prov.non_finite_count(), 2);
    }

    #[test]
    fn value_prior_is_rescaled() {
        let mut p = ApproximatorParams::zeros(1, 2, &NetworkConfig {
            trunk: vec![2],
            head_hidden: 2,
            value_scale: 100.0,
        });
        // Output biases: both masks on, safe -0.03, collision -0.1.
        let n = p.value.param_count();
        p.value.params_mut()[n - 4..].copy_from_slice(&[10.0, 10.0, -0.03, -0.1]);
        match network_provider(p).value_prior(&[0.0]) {
            ValuePrior::Value(v) => assert!((v.total + 13.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
