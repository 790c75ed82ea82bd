//! Per-party feedforward networks and their gradient kernels.
//!
//! Each party's response function is a small multilayer perceptron taking
//! the party's two latents and emitting a probability vector over its
//! outcomes through a softmax output layer. The batch kernels below are
//! written over contiguous row-major slices so the compiler can vectorize
//! the inner dot products.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            _ => None,
        }
    }

    #[inline]
    fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the post-activation value.
    #[inline]
    fn derivative_from_output(&self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// One party's response network. `layer_sizes` runs from the two latent
/// inputs to the outcome cardinality; weights are row-major `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyNet {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    activation: Activation,
}

impl PartyNet {
    /// Glorot-uniform weights, zero biases.
    pub fn random(layer_sizes: Vec<usize>, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least input and output layers");
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..layer_sizes.len() - 1 {
            let (fan_in, fan_out) = (layer_sizes[l], layer_sizes[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..=bound)).collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Self { layer_sizes, weights, biases, activation }
    }

    /// Builds a network from explicit parameters, checking shapes.
    pub fn from_parts(
        layer_sizes: Vec<usize>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        activation: Activation,
    ) -> Result<Self, TrainError> {
        let layers = layer_sizes.len().saturating_sub(1);
        if layer_sizes.len() < 2 || weights.len() != layers || biases.len() != layers {
            return Err(TrainError::ShapeMismatch {
                detail: format!(
                    "{} layer sizes with {} weight and {} bias blocks",
                    layer_sizes.len(),
                    weights.len(),
                    biases.len()
                ),
            });
        }
        for l in 0..layers {
            let expected_w = layer_sizes[l] * layer_sizes[l + 1];
            if weights[l].len() != expected_w || biases[l].len() != layer_sizes[l + 1] {
                return Err(TrainError::ShapeMismatch {
                    detail: format!(
                        "layer {l}: weight block {} and bias block {} for sizes {}x{}",
                        weights[l].len(),
                        biases[l].len(),
                        layer_sizes[l + 1],
                        layer_sizes[l]
                    ),
                });
            }
        }
        Ok(Self { layer_sizes, weights, biases, activation })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Response probabilities for a single latent pair.
    pub fn forward(&self, input: [f64; 2]) -> Vec<f64> {
        let mut acts = ChunkActivations::new(self, 1);
        self.forward_chunk(&input, 1, &mut acts);
        acts.output(1).to_vec()
    }

    /// Forward pass over `m` rows of two inputs each, filling `acts`.
    ///
    /// Works against a transposed weight scratch so the inner loops are
    /// element-wise multiply-adds over contiguous rows, which vectorize
    /// without reassociating any reduction.
    pub(crate) fn forward_chunk(&self, inputs: &[f64], m: usize, acts: &mut ChunkActivations) {
        debug_assert_eq!(inputs.len(), m * 2);
        acts.input[..m * 2].copy_from_slice(&inputs[..m * 2]);
        let layers = self.weights.len();
        let ChunkActivations { input, acts: layer_acts, wt_scratch, .. } = acts;
        for l in 0..layers {
            let nin = self.layer_sizes[l];
            let nout = self.layer_sizes[l + 1];
            let w = &self.weights[l];
            let b = &self.biases[l];
            let wt = &mut wt_scratch[..nin * nout];
            for o in 0..nout {
                for k in 0..nin {
                    wt[k * nout + o] = w[o * nin + k];
                }
            }
            let (prev, cur) = if l == 0 {
                (&input[..], &mut layer_acts[0])
            } else {
                let (left, right) = layer_acts.split_at_mut(l);
                (&left[l - 1][..], &mut right[0])
            };
            let x = &prev[..m * nin];
            let z = &mut cur[..m * nout];
            // Two rows per pass share each transposed weight row.
            let mut i = 0;
            while i + 1 < m {
                let x0 = &x[i * nin..(i + 1) * nin];
                let x1 = &x[(i + 1) * nin..(i + 2) * nin];
                let (z0, z1) = z[i * nout..(i + 2) * nout].split_at_mut(nout);
                z0.copy_from_slice(b);
                z1.copy_from_slice(b);
                for k in 0..nin {
                    let (xv0, xv1) = (x0[k], x1[k]);
                    if xv0 == 0.0 && xv1 == 0.0 {
                        continue;
                    }
                    let wr = &wt[k * nout..(k + 1) * nout];
                    for ((zv0, zv1), wv) in z0.iter_mut().zip(z1.iter_mut()).zip(wr) {
                        *zv0 += xv0 * wv;
                        *zv1 += xv1 * wv;
                    }
                }
                i += 2;
            }
            if i < m {
                let xr = &x[i * nin..(i + 1) * nin];
                let zr = &mut z[i * nout..(i + 1) * nout];
                zr.copy_from_slice(b);
                for (k, &xv) in xr.iter().enumerate() {
                    if xv == 0.0 {
                        continue;
                    }
                    let wr = &wt[k * nout..(k + 1) * nout];
                    for (zv, wv) in zr.iter_mut().zip(wr) {
                        *zv += xv * wv;
                    }
                }
            }
            if l + 1 < layers {
                for v in z.iter_mut() {
                    *v = self.activation.apply(*v);
                }
            } else {
                // Normalized exponential on each output row.
                for i in 0..m {
                    let row = &mut z[i * nout..(i + 1) * nout];
                    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for v in row.iter_mut() {
                        *v = (*v - max).exp();
                        sum += *v;
                    }
                    for v in row.iter_mut() {
                        *v /= sum;
                    }
                }
            }
        }
    }

    /// Backward pass over a chunk. `dout` holds the loss gradient with
    /// respect to the softmax outputs; gradients accumulate into `grads`.
    pub(crate) fn backward_chunk(
        &self,
        m: usize,
        acts: &ChunkActivations,
        dout: &[f64],
        grads: &mut NetGrads,
        scratch: &mut BackwardScratch,
    ) {
        let layers = self.weights.len();
        let nout = self.output_size();
        debug_assert_eq!(dout.len() % nout, 0);

        // Softmax backward: dz = y .* (dy - <y, dy>).
        {
            let y = &acts.acts[layers - 1][..m * nout];
            let dz = &mut scratch.dz_a[..m * nout];
            for i in 0..m {
                let yr = &y[i * nout..(i + 1) * nout];
                let dyr = &dout[i * nout..(i + 1) * nout];
                let dot: f64 = yr.iter().zip(dyr).map(|(a, b)| a * b).sum();
                let dzr = &mut dz[i * nout..(i + 1) * nout];
                for o in 0..nout {
                    dzr[o] = yr[o] * (dyr[o] - dot);
                }
            }
        }

        for l in (0..layers).rev() {
            let nin = self.layer_sizes[l];
            let nout_l = self.layer_sizes[l + 1];
            let x = if l == 0 { &acts.input[..m * nin] } else { &acts.acts[l - 1][..m * nin] };
            let dz: &[f64] = &scratch.dz_a[..m * nout_l];
            let w = &self.weights[l];
            let dw = &mut grads.weights[l];
            let db = &mut grads.biases[l];
            let dx = &mut scratch.dz_b[..m * nin];
            if l > 0 {
                dx.fill(0.0);
            }
            // Two rows per pass share each weight-gradient and weight row.
            let mut i = 0;
            while i + 1 < m {
                let dz0 = &dz[i * nout_l..(i + 1) * nout_l];
                let dz1 = &dz[(i + 1) * nout_l..(i + 2) * nout_l];
                let x0 = &x[i * nin..(i + 1) * nin];
                let x1 = &x[(i + 1) * nin..(i + 2) * nin];
                let (dx0, dx1) = dx[i * nin..(i + 2) * nin].split_at_mut(nin);
                for o in 0..nout_l {
                    let (g0, g1) = (dz0[o], dz1[o]);
                    if g0 == 0.0 && g1 == 0.0 {
                        continue;
                    }
                    db[o] += g0;
                    db[o] += g1;
                    let dwr = &mut dw[o * nin..(o + 1) * nin];
                    for j in 0..nin {
                        dwr[j] += g0 * x0[j] + g1 * x1[j];
                    }
                    if l > 0 {
                        let wr = &w[o * nin..(o + 1) * nin];
                        for j in 0..nin {
                            dx0[j] += g0 * wr[j];
                            dx1[j] += g1 * wr[j];
                        }
                    }
                }
                i += 2;
            }
            if i < m {
                let dzr = &dz[i * nout_l..(i + 1) * nout_l];
                let xr = &x[i * nin..(i + 1) * nin];
                for o in 0..nout_l {
                    let g = dzr[o];
                    if g == 0.0 {
                        continue;
                    }
                    db[o] += g;
                    let dwr = &mut dw[o * nin..(o + 1) * nin];
                    for (dwv, xv) in dwr.iter_mut().zip(xr) {
                        *dwv += g * xv;
                    }
                    if l > 0 {
                        let dxr = &mut dx[i * nin..(i + 1) * nin];
                        let wr = &w[o * nin..(o + 1) * nin];
                        for (dxv, wv) in dxr.iter_mut().zip(wr) {
                            *dxv += g * wv;
                        }
                    }
                }
            }
            if l > 0 {
                // Through the hidden activation of layer l-1.
                let a_prev = &acts.acts[l - 1][..m * nin];
                for (dxv, av) in dx.iter_mut().zip(a_prev) {
                    *dxv *= self.activation.derivative_from_output(*av);
                }
                std::mem::swap(&mut scratch.dz_a, &mut scratch.dz_b);
            }
        }
    }
}

/// Post-activation values for every layer of one network over one chunk.
#[derive(Debug, Clone)]
pub(crate) struct ChunkActivations {
    pub(crate) input: Vec<f64>,
    pub(crate) acts: Vec<Vec<f64>>,
    wt_scratch: Vec<f64>,
    capacity: usize,
}

impl ChunkActivations {
    pub(crate) fn new(net: &PartyNet, capacity: usize) -> Self {
        let max_block = net.weights.iter().map(Vec::len).max().unwrap_or(0);
        Self {
            input: vec![0.0; capacity * 2],
            acts: net.layer_sizes[1..].iter().map(|&s| vec![0.0; capacity * s]).collect(),
            wt_scratch: vec![0.0; max_block],
            capacity,
        }
    }

    pub(crate) fn output(&self, m: usize) -> &[f64] {
        let last = self.acts.last().unwrap();
        let nout = last.len() / self.capacity;
        &last[..m * nout]
    }
}

/// Ping-pong buffers for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct BackwardScratch {
    dz_a: Vec<f64>,
    dz_b: Vec<f64>,
}

impl BackwardScratch {
    pub(crate) fn new(max_width: usize, capacity: usize) -> Self {
        Self { dz_a: vec![0.0; capacity * max_width], dz_b: vec![0.0; capacity * max_width] }
    }
}

/// Parameter gradients matching a [`PartyNet`]'s shapes.
#[derive(Debug, Clone)]
pub struct NetGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl NetGrads {
    pub fn zeros_like(net: &PartyNet) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn zero(&mut self) {
        for w in &mut self.weights {
            w.fill(0.0);
        }
        for b in &mut self.biases {
            b.fill(0.0);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for w in self.weights.iter().chain(&self.biases) {
            for v in w {
                m = m.max(v.abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|b| b.iter().all(|v| v.is_finite()))
    }
}
