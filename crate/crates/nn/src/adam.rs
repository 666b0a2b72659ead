use crate::error::{NnError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    skipped: u64,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
            skipped: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Steps refused because of non-finite gradients.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::Shape(format!(
                "optimizer holds {} moments, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if grads.iter().any(|g| !g.is_finite()) {
            self.skipped += 1;
            return Err(NnError::NonFiniteGradient);
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0];
        let mut opt = Adam::new(2, 0.1);
        opt.step(&mut p, &[0.0, 0.0]).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
    }

    #[test]
    fn non_finite_gradient_is_skipped() {
        let mut p = vec![1.0];
        let mut opt = Adam::new(1, 0.1);
        assert!(matches!(opt.step(&mut p, &[f64::NAN]), Err(NnError::NonFiniteGradient)));
        assert_eq!(p, vec![1.0]);
        assert_eq!((opt.steps(), opt.skipped()), (0, 1));
    }

    #[test]
    fn convex_regression_loss_decreases() {
        // Least squares fit of y = 3x - 1 on fixed points.
        let data = [(-1.0, -4.0), (0.0, -1.0), (0.5, 0.5), (2.0, 5.0)];
        let loss = |p: &[f64]| data.iter().map(|(x, y)| (p[0] * x + p[1] - y).powi(2)).sum::<f64>() / 4.0;
        let mut p = vec![0.0, 0.0];
        let mut opt = Adam::new(2, 0.01);
        let mut prev = loss(&p);
        for _ in 0..100 {
            let g = data.iter().fold([0.0, 0.0], |acc, (x, y)| {
                let r = p[0] * x + p[1] - y;
                [acc[0] + r * x / 2.0, acc[1] + r / 2.0]
            });
            opt.step(&mut p, &g).unwrap();
            let l = loss(&p);
            assert!(l < prev);
            prev = l;
        }
    }
}
