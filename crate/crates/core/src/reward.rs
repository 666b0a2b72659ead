//! Factored rewards and values.
//!
//! Rewards are split into a smooth safe-driving factor and a collision
//! factor. Values backed up through the tree keep the same split so the
//! learner can regress each factor separately.

use std::ops::{Add, AddAssign};

/// One-step reward split into its two additive factors.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FactoredReward {
    pub safe: f64,
    pub collision: f64,
}

impl FactoredReward {
    pub const ZERO: FactoredReward = FactoredReward {
        safe: 0.0,
        collision: 0.0,
    };

    pub fn new(safe: f64, collision: f64) -> Self {
        Self { safe, collision }
    }

    /// Reward with everything in the safe factor.
    pub fn scalar(total: f64) -> Self {
        Self {
            safe: total,
            collision: 0.0,
        }
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.safe + self.collision
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            safe: self.safe * k,
            collision: self.collision * k,
        }
    }
}

impl Add for FactoredReward {
    type Output = FactoredReward;

    fn add(self, rhs: Self) -> Self {
        Self {
            safe: self.safe + rhs.safe,
            collision: self.collision + rhs.collision,
        }
    }
}

impl AddAssign for FactoredReward {
    fn add_assign(&mut self, rhs: Self) {
        self.safe += rhs.safe;
        self.collision += rhs.collision;
    }
}

/// A value estimate carrying both factors and their combined total.
///
/// `total` is tracked on its own arithmetic path so that it can be compared
/// exactly against lower and upper bounds computed the same way. It agrees
/// with `safe + collision` up to rounding.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FactoredValue {
    pub safe: f64,
    pub collision: f64,
    pub total: f64,
}

impl FactoredValue {
    pub const ZERO: FactoredValue = FactoredValue {
        safe: 0.0,
        collision: 0.0,
        total: 0.0,
    };

    pub fn new(safe: f64, collision: f64) -> Self {
        Self {
            safe,
            collision,
            total: safe + collision,
        }
    }

    pub fn from_reward(r: FactoredReward) -> Self {
        Self::new(r.safe, r.collision)
    }

    /// Moves the total to `target`, assigning the whole shift to the safe
    /// factor. Collision magnitudes only ever come from simulated evidence.
    pub fn shifted_to(&self, target: f64) -> Self {
        Self {
            safe: self.safe + (target - self.total),
            collision: self.collision,
            total: target,
        }
    }

    /// Clamps the total into `[lower, upper]` (lower wins if they cross).
    pub fn clipped(&self, lower: f64, upper: f64) -> Self {
        if self.total > upper {
            self.shifted_to(upper)
        } else if self.total < lower {
            self.shifted_to(lower)
        } else {
            *self
        }
    }

    /// Absolute disagreement between `total` and the factor sum.
    pub fn additivity_error(&self) -> f64 {
        (self.safe + self.collision - self.total).abs()
    }

    pub fn is_finite(&self) -> bool {
        self.safe.is_finite() && self.collision.is_finite() && self.total.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_assigns_delta_to_safe() {
        let v = FactoredValue::new(-3.0, -10.0);
        let c = v.clipped(-20.0, -5.0);
        assert_eq!(c.total, -13.0);
        let c = v.clipped(-10.0, -2.0);
        assert_eq!(c.total, -10.0);
        assert_eq!(c.collision, -10.0);
        assert_eq!(c.safe, 0.0);
        let c = FactoredValue::new(0.0, 0.0).clipped(-10.0, -2.0);
        assert_eq!(c.total, -2.0);
        assert_eq!(c.safe, -2.0);
    }

    #[test]
    fn reward_total_is_sum() {
        let r = FactoredReward::new(-1.5, -36500.0);
        assert_eq!(r.total(), -36501.5);
        assert_eq!(r.scale(0.5).collision, -18250.0);
    }
}
