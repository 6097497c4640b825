//! Minimal dense networks on flat `Vec<f64>` storage: forward pass, exact
//! backpropagation, and flat parameter access for serialization and
//! finite-difference checks. Hidden layers use ReLU; the output layer is
//! linear (callers apply softmax where needed).

// The matrix kernels index `w[o * n_in + i]` directly; iterator rewrites
// obscure the layout without changing the code generated.
#![allow(clippy::needless_range_loop)]

use rand::Rng;

/// Weights of one dense layer: `w` is row-major `[out x in]`, `b` has one
/// entry per output.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Layer {
    pub(crate) w: Vec<f64>,
    pub(crate) b: Vec<f64>,
}

/// Fully connected network with fixed layer sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
}

/// Per-layer gradient accumulator with the same shape as an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<Layer>,
}

/// Activations recorded by [`Mlp::forward_cached`] for backpropagation.
pub struct ForwardCache {
    /// Input to each layer (so `inputs[0]` is the network input).
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of each layer.
    preacts: Vec<Vec<f64>>,
}

impl Mlp {
    /// Xavier-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn xavier(sizes: &[usize], rng: &mut impl Rng) -> Mlp {
        assert!(sizes.len() >= 2, "network needs at least one layer");
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (n_in, n_out) = (pair[0], pair[1]);
                let bound = (6.0 / (n_in + n_out) as f64).sqrt();
                Layer {
                    w: (0..n_in * n_out)
                        .map(|_| rng.gen_range(-bound..=bound))
                        .collect(),
                    b: vec![0.0; n_out],
                }
            })
            .collect();
        Mlp {
            sizes: sizes.to_vec(),
            layers,
        }
    }

    pub fn zeros(sizes: &[usize]) -> Mlp {
        assert!(sizes.len() >= 2, "network needs at least one layer");
        let layers = sizes
            .windows(2)
            .map(|pair| Layer {
                w: vec![0.0; pair[0] * pair[1]],
                b: vec![0.0; pair[1]],
            })
            .collect();
        Mlp {
            sizes: sizes.to_vec(),
            layers,
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (out, _) = self.forward_cached(x);
        out
    }

    /// Forward pass that records everything backprop needs.
    pub fn forward_cached(&self, x: &[f64]) -> (Vec<f64>, ForwardCache) {
        assert_eq!(x.len(), self.sizes[0], "input width mismatch");
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut preacts = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let n_in = self.sizes[li];
            let n_out = self.sizes[li + 1];
            let mut z = layer.b.clone();
            for o in 0..n_out {
                let row = &layer.w[o * n_in..(o + 1) * n_in];
                let mut acc = 0.0;
                for i in 0..n_in {
                    acc += row[i] * a[i];
                }
                z[o] += acc;
            }
            inputs.push(a);
            let last = li + 1 == self.layers.len();
            a = if last {
                z.clone()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            preacts.push(z);
        }
        (a, ForwardCache { inputs, preacts })
    }

    /// Accumulate `d(scalar)/d(params)` into `grads`, given the gradient of
    /// that scalar with respect to the network output.
    pub fn backprop_into(&self, cache: &ForwardCache, d_out: &[f64], grads: &mut Gradients) {
        assert_eq!(d_out.len(), *self.sizes.last().unwrap());
        let mut delta = d_out.to_vec();
        for li in (0..self.layers.len()).rev() {
            let n_in = self.sizes[li];
            let n_out = self.sizes[li + 1];
            let layer = &self.layers[li];
            let g = &mut grads.layers[li];
            let a_in = &cache.inputs[li];
            for o in 0..n_out {
                g.b[o] += delta[o];
                let row = &mut g.w[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    row[i] += delta[o] * a_in[i];
                }
            }
            if li > 0 {
                let mut prev = vec![0.0; n_in];
                for o in 0..n_out {
                    let row = &layer.w[o * n_in..(o + 1) * n_in];
                    for i in 0..n_in {
                        prev[i] += row[i] * delta[o];
                    }
                }
                // ReLU gate from the previous layer's pre-activation.
                let z_prev = &cache.preacts[li - 1];
                for i in 0..n_in {
                    if z_prev[i] <= 0.0 {
                        prev[i] = 0.0;
                    }
                }
                delta = prev;
            }
        }
    }

    /// Gradient-ascent step: `params += lr * grads`.
    pub fn ascend(&mut self, grads: &Gradients, lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.w.iter_mut().zip(&g.w) {
                *w += lr * gw;
            }
            for (b, gb) in layer.b.iter_mut().zip(&g.b) {
                *b += lr * gb;
            }
        }
    }

    /// Gradient-descent step: `params -= lr * grads`.
    pub fn descend(&mut self, grads: &Gradients, lr: f64) {
        self.ascend(grads, -lr);
    }

    /// All parameters, layer-major, weights before biases within a layer.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.w);
            out.extend_from_slice(&layer.b);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "parameter count mismatch");
        let mut pos = 0;
        for layer in &mut self.layers {
            let nw = layer.w.len();
            layer.w.copy_from_slice(&flat[pos..pos + nw]);
            pos += nw;
            let nb = layer.b.len();
            layer.b.copy_from_slice(&flat[pos..pos + nb]);
            pos += nb;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Gradients {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| Layer {
                    w: vec![0.0; l.w.len()],
                    b: vec![0.0; l.b.len()],
                })
                .collect(),
        }
    }

    /// Same layout as [`Mlp::flat`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(&layer.w);
            out.extend_from_slice(&layer.b);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }
}

/// Numerically stable softmax: shifts by the max logit before exponentiating.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}
