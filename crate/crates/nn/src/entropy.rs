//! Automatic tuning of the entropy temperature.

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyController {
    log_alpha: f64,
    pub target_entropy: f64,
    pub learning_rate: f64,
}

impl EntropyController {
    pub fn new(alpha: f64, target_entropy: f64, learning_rate: f64) -> Self {
        assert!(alpha > 0.0, "alpha must be positive");
        Self {
            log_alpha: alpha.ln(),
            target_entropy,
            learning_rate,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    /// Gradient step on `log_alpha * (H_batch - H_target)`: alpha grows
    /// while the policy is less random than the target.
    pub fn update(&mut self, batch_entropy: f64) {
        self.log_alpha += self.learning_rate * (self.target_entropy - batch_entropy);
    }
}

pub fn update_alpha(controller: &EntropyController, batch_entropy: f64) -> EntropyController {
    let mut c = controller.clone();
    c.update(batch_entropy);
    c
}

/// Linear anneal from `start` to `end` nats of target entropy over
/// `steps` gradient steps, constant afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySchedule {
    pub start: f64,
    pub end: f64,
    pub steps: u64,
}

impl EntropySchedule {
    pub fn for_actions(action_count: usize, steps: u64) -> Self {
        let h = (action_count as f64).ln();
        Self {
            start: 0.98 * h,
            end: 0.65 * h,
            steps,
        }
    }

    pub fn target(&self, step: u64) -> f64 {
        if self.steps == 0 || step >= self.steps {
            return self.end;
        }
        self.start + (self.end - self.start) * step as f64 / self.steps as f64
    }
}
