//! The policy, value and Q networks and their forward passes.

use crate::mlp::{sigmoid, softmax, Mlp};
use guidedplan_core::FactoredValue;

pub const MASK_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Hidden widths of the shared-shape trunk.
    pub trunk: Vec<usize>,
    /// Width of the extra dense layer in the policy head; 0 drops it.
    pub head_hidden: usize,
    /// Value labels are divided by this before regression.
    pub value_scale: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            trunk: vec![128, 128],
            head_hidden: 128,
            value_scale: 100.0,
        }
    }
}

impl NetworkConfig {
    pub fn policy_sizes(&self, input: usize, actions: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(&self.trunk);
        if self.head_hidden > 0 {
            s.push(self.head_hidden);
        }
        s.push(actions);
        s
    }

    /// Mask logits and values for the safe and collision factors.
    pub fn value_sizes(&self, input: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(&self.trunk);
        s.push(4);
        s
    }

    pub fn q_sizes(&self, input: usize, actions: usize) -> Vec<usize> {
        let mut s = vec![input];
        s.extend(&self.trunk);
        s.push(actions);
        s
    }
}

/// Policy and value networks used by the planner.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximatorParams {
    pub policy: Mlp,
    pub value: Mlp,
    pub value_scale: f64,
}

impl ApproximatorParams {
    pub fn new(input: usize, actions: usize, config: &NetworkConfig, seed: u64) -> Self {
        Self {
            policy: Mlp::random(&config.policy_sizes(input, actions), seed, 0.1),
            value: Mlp::random(&config.value_sizes(input), seed ^ 0x5eed, 0.1),
            value_scale: config.value_scale,
        }
    }

    pub fn zeros(input: usize, actions: usize, config: &NetworkConfig) -> Self {
        Self {
            policy: Mlp::zeros(&config.policy_sizes(input, actions)),
            value: Mlp::zeros(&config.value_sizes(input)),
            value_scale: config.value_scale,
        }
    }

    pub fn input_len(&self) -> usize {
        self.policy.input_len()
    }

    pub fn action_count(&self) -> usize {
        self.policy.output_len()
    }

    pub fn is_finite(&self) -> bool {
        self.policy.is_finite() && self.value.is_finite() && self.value_scale.is_finite()
    }
}

/// Twin Q networks with their slow-moving targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinQ {
    pub online: [Mlp; 2],
    pub target: [Mlp; 2],
}

impl TwinQ {
    pub fn new(input: usize, actions: usize, config: &NetworkConfig, seed: u64) -> Self {
        let sizes = config.q_sizes(input, actions);
        let online = [Mlp::random(&sizes, seed, 1.0), Mlp::random(&sizes, seed ^ 0x7717, 1.0)];
        Self {
            target: online.clone(),
            online,
        }
    }

    pub fn polyak(&mut self, tau: f64) {
        for (t, o) in self.target.iter_mut().zip(&self.online) {
            t.polyak_from(o, tau);
        }
    }

    /// Elementwise minimum of the two target networks.
    pub fn target_min(&self, x: &[f64]) -> Vec<f64> {
        let a = self.target[0].forward(x);
        let b = self.target[1].forward(x);
        a.into_iter().zip(b).map(|(p, q)| p.min(q)).collect()
    }

    pub fn online_min(&self, x: &[f64]) -> Vec<f64> {
        let a = self.online[0].forward(x);
        let b = self.online[1].forward(x);
        a.into_iter().zip(b).map(|(p, q)| p.min(q)).collect()
    }
}

pub fn forward_policy(params: &ApproximatorParams, x: &[f64]) -> Vec<f64> {
    softmax(&params.policy.forward(x))
}

/// Raw head outputs, in normalized value units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueHeads {
    pub mask_safe: f64,
    pub mask_collision: f64,
    pub safe: f64,
    pub collision: f64,
}

pub fn value_heads(net: &Mlp, x: &[f64]) -> ValueHeads {
    let o = net.forward(x);
    ValueHeads {
        mask_safe: sigmoid(o[0]),
        mask_collision: sigmoid(o[1]),
        safe: o[2],
        collision: o[3],
    }
}

pub fn forward_value(params: &ApproximatorParams, x: &[f64]) -> ValueHeads {
    value_heads(&params.value, x)
}

/// Gates each factor by its thresholded mask.
pub fn recover_value(mask_safe: f64, mask_collision: f64, safe: f64, collision: f64) -> FactoredValue {
    let gate = |m: f64, v: f64| if m >= MASK_THRESHOLD { v } else { 0.0 };
    FactoredValue::new(gate(mask_safe, safe), gate(mask_collision, collision))
}

/// Value prior in reward units.
pub fn predict_value(params: &ApproximatorParams, x: &[f64]) -> FactoredValue {
    scaled_value(&forward_value(params, x), params.value_scale)
}

pub fn scaled_value(h: &ValueHeads, scale: f64) -> FactoredValue {
    let v = recover_value(h.mask_safe, h.mask_collision, h.safe, h.collision);
    FactoredValue::new(v.safe * scale, v.collision * scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recover_value_examples() {
        assert_eq!(recover_value(1.0, 1.0, -3.0, -10.0).total, -13.0);
        assert_eq!(recover_value(0.0, 0.0, -3.0, -10.0).total, 0.0);
        assert_eq!(recover_value(1.0, 0.0, -3.0, -999.0).total, -3.0);
    }

    #[test]
    fn zero_networks_give_uniform_policy_and_half_masks() {
        let p = ApproximatorParams::zeros(6, 9, &NetworkConfig::default());
        let pi = forward_policy(&p, &[0.5; 6]);
        assert!(pi.iter().all(|&q| (q - 1.0 / 9.0).abs() < 1e-15));
        let v = forward_value(&p, &[1.0; 6]);
        assert_eq!((v.mask_safe, v.mask_collision, v.safe, v.collision), (0.5, 0.5, 0.0, 0.0));
    }

    #[test]
    fn targets_start_equal_to_online() {
        let q = TwinQ::new(3, 2, &NetworkConfig::default(), 1);
        assert_eq!(q.online, q.target);
        assert_ne!(q.online[0], q.online[1]);
    }
}
