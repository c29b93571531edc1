//! Minimal dense MLP with tanh hidden layers and a linear output, flat
//! parameter vector, and exact analytic backprop. Small enough that every
//! gradient is cheap to verify against central finite differences.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths including input and output, e.g. [2, 32, 32, 1].
    pub sizes: Vec<usize>,
    /// Row-major weights then biases per layer, concatenated.
    pub params: Vec<f64>,
}

/// Per-layer activations cached by the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Activations per layer, input first, output last.
    pub acts: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn n_params(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// He-style scaled uniform init, deterministic per seed.
    pub fn new(sizes: Vec<usize>, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|s| *s == 0) {
            return Err(Error::InvalidArgument("need at least input and output layer".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(Self::n_params(&sizes));
        for w in sizes.windows(2) {
            let scale = (1.0 / w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] {
                params.push(rng.gen_range(-scale..scale));
            }
            for _ in 0..w[1] {
                params.push(0.0);
            }
        }
        Ok(Self { sizes, params })
    }

    pub fn zeros(sizes: Vec<usize>) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|s| *s == 0) {
            return Err(Error::InvalidArgument("need at least input and output layer".into()));
        }
        let n = Self::n_params(&sizes);
        Ok(Self { sizes, params: vec![0.0; n] })
    }

    fn layer_offsets(&self) -> Vec<(usize, usize)> {
        // (weight offset, bias offset) per layer
        let mut offs = Vec::new();
        let mut cursor = 0;
        for w in self.sizes.windows(2) {
            offs.push((cursor, cursor + w[0] * w[1]));
            cursor += w[0] * w[1] + w[1];
        }
        offs
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.sizes[0] {
            return Err(Error::DimensionMismatch(format!(
                "input length {} vs layer width {}",
                input.len(),
                self.sizes[0]
            )));
        }
        let offs = self.layer_offsets();
        let n_layers = self.sizes.len() - 1;
        let mut acts = vec![input.to_vec()];
        for l in 0..n_layers {
            let (w_off, b_off) = offs[l];
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let prev = &acts[l];
            let mut out = vec![0.0; n_out];
            for i in 0..n_out {
                let mut acc = self.params[b_off + i];
                for j in 0..n_in {
                    acc += self.params[w_off + i * n_in + j] * prev[j];
                }
                out[i] = if l + 1 < n_layers { acc.tanh() } else { acc };
            }
            acts.push(out);
        }
        Ok((acts.last().unwrap().clone(), ForwardCache { acts }))
    }

    /// Backprop of an upstream gradient `dL/dy` through the cached pass.
    /// Returns `dL/dparams` (same layout as `params`) and `dL/dinput`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n_layers = self.sizes.len() - 1;
        if grad_out.len() != self.sizes[n_layers] {
            return Err(Error::DimensionMismatch("grad_out length".into()));
        }
        let offs = self.layer_offsets();
        let mut grads = vec![0.0; self.params.len()];
        let mut delta = grad_out.to_vec();
        for l in (0..n_layers).rev() {
            let (w_off, b_off) = offs[l];
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            // hidden layers carry the tanh derivative
            if l + 1 < n_layers {
                for i in 0..n_out {
                    let y = cache.acts[l + 1][i];
                    delta[i] *= 1.0 - y * y;
                }
            }
            let prev = &cache.acts[l];
            for i in 0..n_out {
                grads[b_off + i] += delta[i];
                for j in 0..n_in {
                    grads[w_off + i * n_in + j] += delta[i] * prev[j];
                }
            }
            let mut next_delta = vec![0.0; n_in];
            for j in 0..n_in {
                let mut acc = 0.0;
                for i in 0..n_out {
                    acc += self.params[w_off + i * n_in + j] * delta[i];
                }
                next_delta[j] = acc;
            }
            delta = next_delta;
        }
        let input_grad = delta;
        Ok((grads, input_grad))
    }
}

/// Rescales `grad` in place so its l2 norm is at most `max_norm`.
pub fn clip_gradient(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= s;
        }
    }
}
