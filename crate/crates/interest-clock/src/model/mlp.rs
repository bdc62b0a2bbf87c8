//! Small feed-forward network with hand-rolled backpropagation and
//! per-coordinate adaptive-gradient updates. Hidden layers are ReLU, the
//! output layer is a single linear logit.

use std::io::{Read, Write};

use rand::Rng;

use crate::codec;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    relu: bool,
    /// Row-major out_dim x in_dim.
    weights: Vec<f64>,
    bias: Vec<f64>,
    acc_w: Vec<f64>,
    acc_b: Vec<f64>,
}

impl DenseLayer {
    fn new<R: Rng>(in_dim: usize, out_dim: usize, relu: bool, init_acc: f64, rng: &mut R) -> Self {
        // Biases share the weight init range: a zero bias would leave ReLU
        // pre-activations exactly on the kink whenever a layer goes dead.
        let scale = 1.0 / (in_dim as f64).sqrt();
        DenseLayer {
            in_dim,
            out_dim,
            relu,
            weights: (0..in_dim * out_dim)
                .map(|_| rng.gen_range(-scale..=scale))
                .collect(),
            bias: (0..out_dim)
                .map(|_| rng.gen_range(-scale..=scale))
                .collect(),
            acc_w: vec![init_acc; in_dim * out_dim],
            acc_b: vec![init_acc; out_dim],
        }
    }

    fn forward(&self, input: &[f64], output: &mut Vec<f64>) {
        output.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut v = self.bias[o];
            for (w, x) in row.iter().zip(input.iter()) {
                v += w * x;
            }
            output.push(if self.relu && v < 0.0 { 0.0 } else { v });
        }
    }
}

/// Per-layer gradients, aligned with the network's layers.
#[derive(Debug, Clone)]
pub struct LayerGradient {
    pub dw: Vec<f64>,
    pub db: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

impl Mlp {
    /// Build `input_dim -> hidden[0] -> ... -> 1` with ReLU hidden layers.
    pub fn new<R: Rng>(input_dim: usize, hidden: &[usize], init_acc: f64, rng: &mut R) -> Mlp {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut prev = input_dim;
        for h in hidden {
            layers.push(DenseLayer::new(prev, *h, true, init_acc, rng));
            prev = *h;
        }
        layers.push(DenseLayer::new(prev, 1, false, init_acc, rng));
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    /// Forward pass; returns the logit and every layer's post-activation
    /// output (needed for backprop).
    pub fn forward(&self, x: &[f64]) -> (f64, Vec<Vec<f64>>) {
        debug_assert_eq!(x.len(), self.input_dim());
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.out_dim);
            let input: &[f64] = if i == 0 { x } else { &activations[i - 1] };
            layer.forward(input, &mut out);
            activations.push(out);
        }
        let logit = activations.last().unwrap()[0];
        (logit, activations)
    }

    /// Backprop from d(loss)/d(logit); returns per-layer gradients and the
    /// gradient with respect to the input vector.
    pub fn backward(
        &self,
        x: &[f64],
        activations: &[Vec<f64>],
        dlogit: f64,
    ) -> (Vec<LayerGradient>, Vec<f64>) {
        let n = self.layers.len();
        let mut grads: Vec<LayerGradient> = (0..n)
            .map(|i| LayerGradient {
                dw: vec![0.0; self.layers[i].weights.len()],
                db: vec![0.0; self.layers[i].out_dim],
            })
            .collect();

        let mut delta = vec![dlogit];
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let input: &[f64] = if l == 0 { x } else { &activations[l - 1] };
            let g = &mut grads[l];
            for o in 0..layer.out_dim {
                let d = delta[o];
                g.db[o] = d;
                let row = &mut g.dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (slot, v) in row.iter_mut().zip(input.iter()) {
                    *slot = d * v;
                }
            }
            let mut dprev = vec![0.0; layer.in_dim];
            for o in 0..layer.out_dim {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (slot, w) in dprev.iter_mut().zip(row.iter()) {
                    *slot += d * w;
                }
            }
            if l > 0 && self.layers[l - 1].relu {
                for (slot, a) in dprev.iter_mut().zip(activations[l - 1].iter()) {
                    if *a <= 0.0 {
                        *slot = 0.0;
                    }
                }
            }
            delta = dprev;
        }
        (grads, delta)
    }

    pub fn apply_adagrad(&mut self, grads: &[LayerGradient], lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads.iter()) {
            for (i, dw) in g.dw.iter().enumerate() {
                layer.acc_w[i] += dw * dw;
                layer.weights[i] -= lr * dw / layer.acc_w[i].sqrt();
            }
            for (o, db) in g.db.iter().enumerate() {
                layer.acc_b[o] += db * db;
                layer.bias[o] -= lr * db / layer.acc_b[o].sqrt();
            }
        }
    }

    // Flat parameter order: per layer, weights then biases.

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn param(&self, mut i: usize) -> f64 {
        for layer in &self.layers {
            if i < layer.weights.len() {
                return layer.weights[i];
            }
            i -= layer.weights.len();
            if i < layer.bias.len() {
                return layer.bias[i];
            }
            i -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut i: usize, v: f64) {
        for layer in &mut self.layers {
            if i < layer.weights.len() {
                layer.weights[i] = v;
                return;
            }
            i -= layer.weights.len();
            if i < layer.bias.len() {
                layer.bias[i] = v;
                return;
            }
            i -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Flatten per-layer gradients in the same order as the flat parameters.
    pub fn flatten_gradients(&self, grads: &[LayerGradient]) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for g in grads {
            flat.extend_from_slice(&g.dw);
            flat.extend_from_slice(&g.db);
        }
        flat
    }

    pub(crate) fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        codec::write_u32(w, self.layers.len() as u32)?;
        for layer in &self.layers {
            codec::write_u32(w, layer.in_dim as u32)?;
            codec::write_u32(w, layer.out_dim as u32)?;
            codec::write_u8(w, layer.relu as u8)?;
            for v in layer.weights.iter().chain(layer.bias.iter()) {
                codec::write_f64(w, *v)?;
            }
        }
        Ok(())
    }

    pub(crate) fn read<R: Read>(r: &mut R, init_acc: f64) -> Result<Mlp> {
        let n = codec::read_u32(r, "layer count")? as usize;
        if n == 0 {
            return Err(Error::CorruptCheckpoint("network has no layers".into()));
        }
        let mut layers = Vec::with_capacity(n);
        for _ in 0..n {
            let in_dim = codec::read_u32(r, "layer in_dim")? as usize;
            let out_dim = codec::read_u32(r, "layer out_dim")? as usize;
            let relu = codec::read_u8(r, "layer relu flag")? != 0;
            let mut weights = Vec::with_capacity(in_dim * out_dim);
            for _ in 0..in_dim * out_dim {
                weights.push(codec::read_f64(r, "layer weight")?);
            }
            let mut bias = Vec::with_capacity(out_dim);
            for _ in 0..out_dim {
                bias.push(codec::read_f64(r, "layer bias")?);
            }
            layers.push(DenseLayer {
                in_dim,
                out_dim,
                relu,
                acc_w: vec![init_acc; weights.len()],
                acc_b: vec![init_acc; bias.len()],
                weights,
                bias,
            });
        }
        // dimensions must chain to a single logit
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::CorruptCheckpoint(format!(
                    "layer widths do not chain: {} -> {}",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
        }
        if layers.last().unwrap().out_dim != 1 {
            return Err(Error::CorruptCheckpoint(
                "final layer width is not 1".into(),
            ));
        }
        Ok(Mlp { layers })
    }
}
