//! Supervised and soft actor-critic losses with analytic gradients.
//!
//! Per-sample gradients are accumulated in fixed-size chunks that may run
//! in parallel; chunk sums are then added in order, so results do not
//! depend on the parallel flag.

use crate::mlp::{log_softmax, sigmoid, Activations, Mlp};
use crate::nets::TwinQ;
use guidedplan_core::par;

const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub grads: Vec<f64>,
    /// Mean policy entropy over the batch; zero for value and Q losses.
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample<'a> {
    pub x: &'a [f64],
    pub action: usize,
}

/// Value labels already divided by the value scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSample<'a> {
    pub x: &'a [f64],
    pub safe: f64,
    pub collision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<'a> {
    pub x: &'a [f64],
    pub action: usize,
    pub reward: f64,
    pub next_x: &'a [f64],
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwinLossOutput {
    pub loss: f64,
    pub grads: [Vec<f64>; 2],
    pub mean_target: f64,
}

struct Partial {
    loss: f64,
    entropy: f64,
    grads: Vec<f64>,
}

/// `f` returns (loss, entropy, activations, d loss / d output) for one sample.
fn accumulate<T, F>(net: &Mlp, batch: &[T], parallel: bool, f: F) -> LossOutput
where
    T: Sync,
    F: Fn(&T) -> (f64, f64, Activations, Vec<f64>) + Sync + Send,
{
    assert!(!batch.is_empty(), "empty batch");
    let chunks = batch.len().div_ceil(CHUNK);
    let partials = par::map_range(parallel, chunks, |c| {
        let mut p = Partial {
            loss: 0.0,
            entropy: 0.0,
            grads: vec![0.0; net.param_count()],
        };
        for s in &batch[c * CHUNK..((c + 1) * CHUNK).min(batch.len())] {
            let (l, h, acts, g) = f(s);
            p.loss += l;
            p.entropy += h;
            net.backward(&acts, &g, &mut p.grads);
        }
        p
    });
    let n = batch.len() as f64;
    let mut out = LossOutput {
        loss: 0.0,
        grads: vec![0.0; net.param_count()],
        entropy: 0.0,
    };
    for p in partials {
        out.loss += p.loss;
        out.entropy += p.entropy;
        out.grads.iter_mut().zip(&p.grads).for_each(|(a, b)| *a += b);
    }
    out.loss /= n;
    out.entropy /= n;
    out.grads.iter_mut().for_each(|g| *g /= n);
    out
}

fn entropy_of(logp: &[f64]) -> f64 {
    -logp.iter().map(|l| l.exp() * l).sum::<f64>()
}

/// Cross-entropy to the planner's action minus an entropy bonus.
pub fn loss_ssl_policy(policy: &Mlp, batch: &[PolicySample], alpha: f64, parallel: bool) -> LossOutput {
    accumulate(policy, batch, parallel, |s| {
        let acts = policy.forward_cached(s.x);
        let logp = log_softmax(acts.output());
        let h = entropy_of(&logp);
        let g: Vec<f64> = logp
            .iter()
            .enumerate()
            .map(|(j, &lp)| {
                let p = lp.exp();
                p - f64::from(j == s.action) + alpha * p * (lp + h)
            })
            .collect();
        (-logp[s.action] - alpha * h, h, acts, g)
    })
}

/// Mask MSE against nonzero indicators plus indicator-gated value MSE.
pub fn loss_ssl_value(value: &Mlp, batch: &[ValueSample], parallel: bool) -> LossOutput {
    accumulate(value, batch, parallel, |s| {
        let acts = value.forward_cached(s.x);
        let o = acts.output();
        let mut loss = 0.0;
        let mut g = vec![0.0; 4];
        for (k, label) in [s.safe, s.collision].into_iter().enumerate() {
            let ind = f64::from(label != 0.0);
            let m = sigmoid(o[k]);
            loss += (m - ind).powi(2);
            g[k] = 2.0 * (m - ind) * m * (1.0 - m);
            let r = ind * o[2 + k] - label;
            loss += r * r;
            g[2 + k] = 2.0 * ind * r;
        }
        (loss, 0.0, acts, g)
    })
}

/// Expected soft advantage under the policy, with Q held fixed.
/// `q_values[i]` is the Q vector for `xs[i]`.
pub fn loss_sac_policy(policy: &Mlp, xs: &[&[f64]], q_values: &[Vec<f64>], alpha: f64, parallel: bool) -> LossOutput {
    assert_eq!(xs.len(), q_values.len());
    let idx: Vec<usize> = (0..xs.len()).collect();
    accumulate(policy, &idx, parallel, |&i| {
        let acts = policy.forward_cached(xs[i]);
        let logp = log_softmax(acts.output());
        let q = &q_values[i];
        let gvals: Vec<f64> = logp.iter().zip(q).map(|(lp, qa)| alpha * lp - qa).collect();
        let p: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
        let mean: f64 = p.iter().zip(&gvals).map(|(a, b)| a * b).sum();
        let g: Vec<f64> = p.iter().zip(&gvals).map(|(pj, gj)| pj * (gj - mean)).collect();
        (mean, entropy_of(&logp), acts, g)
    })
}

/// Soft Bellman target for one transition.
pub fn soft_target(q: &TwinQ, policy: &Mlp, t: &Transition, alpha: f64, gamma: f64) -> f64 {
    if t.done {
        return t.reward;
    }
    let logp = log_softmax(&policy.forward(t.next_x));
    let qmin = q.target_min(t.next_x);
    let v: f64 = logp.iter().zip(&qmin).map(|(lp, qa)| lp.exp() * (qa - alpha * lp)).sum();
    t.reward + gamma * v
}

/// Squared soft TD error of both online Q networks against the shared
/// target. The reported loss is the sum of the two mean squared errors.
pub fn loss_sac_q(q: &TwinQ, policy: &Mlp, batch: &[Transition], alpha: f64, gamma: f64, parallel: bool) -> TwinLossOutput {
    let targets = par::map(parallel, batch, |t| soft_target(q, policy, t, alpha, gamma));
    let idx: Vec<usize> = (0..batch.len()).collect();
    let per_net = |net: &Mlp| {
        accumulate(net, &idx, parallel, |&i| {
            let acts = net.forward_cached(batch[i].x);
            let a = batch[i].action;
            let r = acts.output()[a] - targets[i];
            let mut g = vec![0.0; net.output_len()];
            g[a] = 2.0 * r;
            (r * r, 0.0, acts, g)
        })
    };
    let l0 = per_net(&q.online[0]);
    let l1 = per_net(&q.online[1]);
    TwinLossOutput {
        loss: l0.loss + l1.loss,
        mean_target: targets.iter().sum::<f64>() / targets.len() as f64,
        grads: [l0.grads, l1.grads],
    }
}
