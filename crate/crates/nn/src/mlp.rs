//! Dense tanh MLP with a linear output layer and hand-written backprop.
//!
//! Parameters live in one flat vector so optimizers and finite-difference
//! checks can treat a network as a point in R^n. Layer `l` stores its
//! `out x in` weight matrix row-major followed by its `out` biases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Post-activation values of every layer for one input, input included.
#[derive(Debug, Clone)]
pub struct Activations {
    layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("at least the input")
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// All-zero network; its output is zero for every input.
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        assert!(sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
        Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
        }
    }

    /// Glorot-uniform weights, zero biases. `output_scale` shrinks the last
    /// layer so fresh heads start near zero.
    pub fn random(sizes: &[usize], seed: u64, output_scale: f64) -> Self {
        let mut net = Self::zeros(sizes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = sizes.len() - 2;
        let mut off = 0;
        for (l, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt() * if l == last { output_scale } else { 1.0 };
            for p in &mut net.params[off..off + fan_in * fan_out] {
                *p = rng.random_range(-1.0..=1.0) * limit;
            }
            off += fan_in * fan_out + fan_out;
        }
        net
    }

    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Option<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) || params.len() != param_count(&sizes) {
            return None;
        }
        Some(Self { sizes, params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Weight and bias slices of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let off = self.offset(l);
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        (&self.params[off..off + i * o], &self.params[off + i * o..off + i * o + o])
    }

    fn offset(&self, l: usize) -> usize {
        param_count(&self.sizes[..=l])
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).layers.pop().unwrap()
    }

    pub fn forward_cached(&self, x: &[f64]) -> Activations {
        assert_eq!(x.len(), self.sizes[0], "input length");
        let n = self.sizes.len() - 1;
        let mut layers = Vec::with_capacity(n + 1);
        layers.push(x.to_vec());
        for l in 0..n {
            let (w, b) = self.layer(l);
            let h = &layers[l];
            let i = h.len();
            let mut z: Vec<f64> = b
                .iter()
                .enumerate()
                .map(|(o, &bo)| bo + w[o * i..(o + 1) * i].iter().zip(h).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if l + 1 < n {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            layers.push(z);
        }
        Activations { layers }
    }

    /// Accumulates `d loss / d params` into `grad` given `d loss / d output`.
    pub fn backward(&self, acts: &Activations, grad_out: &[f64], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let n = self.sizes.len() - 1;
        let mut delta = grad_out.to_vec();
        for l in (0..n).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let off = self.offset(l);
            let h = &acts.layers[l];
            for r in 0..o {
                let d = delta[r];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[off + r * i..off + (r + 1) * i];
                row.iter_mut().zip(h).for_each(|(g, hv)| *g += d * hv);
                grad[off + i * o + r] += d;
            }
            if l == 0 {
                break;
            }
            let (w, _) = self.layer(l);
            let mut prev = vec![0.0; i];
            for (r, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    prev.iter_mut().zip(&w[r * i..(r + 1) * i]).for_each(|(p, wv)| *p += d * wv);
                }
            }
            prev.iter_mut().zip(h).for_each(|(p, hv)| *p *= 1.0 - hv * hv);
            delta = prev;
        }
    }

    /// `self <- tau * source + (1 - tau) * self`.
    pub fn polyak_from(&mut self, source: &Mlp, tau: f64) {
        assert_eq!(self.sizes, source.sizes);
        self.params
            .iter_mut()
            .zip(&source.params)
            .for_each(|(t, s)| *t = tau * s + (1.0 - tau) * *t);
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[3, 4, 2]);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]), vec![0.0, 0.0]);
        assert_eq!(net.param_count(), 3 * 4 + 4 + 4 * 2 + 2);
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&[0.3, -1.0, 2.0]);
        let b = softmax(&[100.3, 99.0, 102.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigmoid_extremes_are_finite() {
        assert_eq!(sigmoid(-1e3), 0.0);
        assert_eq!(sigmoid(1e3), 1.0);
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn polyak_interpolates() {
        let mut t = Mlp::zeros(&[1, 1]);
        let mut s = Mlp::zeros(&[1, 1]);
        s.params_mut().fill(1.0);
        t.polyak_from(&s, 0.25);
        assert_eq!(t.params(), &[0.25, 0.25]);
    }
}
