//! The triangle-constrained model and its Monte Carlo distribution.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::qdist::Distribution;

use super::net::{Activation, ChunkActivations, PartyNet};
use super::TrainError;

/// Fixed chunk length for batch kernels. Reductions always combine chunk
/// partials in index order, so results are bit-identical for any thread
/// count.
pub(crate) const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    pub fn name(&self) -> &'static str {
        match self {
            Party::A => "A",
            Party::B => "B",
            Party::C => "C",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "A" | "a" => Some(Party::A),
            "B" | "b" => Some(Party::B),
            "C" | "c" => Some(Party::C),
            _ => None,
        }
    }
}

/// Three per-party response networks wired to the triangle: the network for
/// Alice consumes latents `(beta, gamma)`, Bob's `(gamma, alpha)`, and
/// Charlie's `(alpha, beta)`. No network ever sees its party's non-adjacent
/// latent, so any parameter assignment stays inside the local set.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleModel {
    pub(crate) net_a: PartyNet,
    pub(crate) net_b: PartyNet,
    pub(crate) net_c: PartyNet,
    cardinality: usize,
}

impl TriangleModel {
    pub fn new(
        net_a: PartyNet,
        net_b: PartyNet,
        net_c: PartyNet,
    ) -> Result<Self, TrainError> {
        let o = net_a.output_size();
        for net in [&net_a, &net_b, &net_c] {
            if net.output_size() != o {
                return Err(TrainError::ShapeMismatch {
                    detail: "parties disagree on outcome cardinality".into(),
                });
            }
            if net.layer_sizes()[0] != 2 {
                return Err(TrainError::ShapeMismatch {
                    detail: "party networks take exactly two latents".into(),
                });
            }
        }
        Ok(Self { net_a, net_b, net_c, cardinality: o })
    }

    /// Randomly initialized model with `depth` hidden layers of `width`
    /// units per party.
    pub fn random(
        cardinality: usize,
        depth: usize,
        width: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut sizes = Vec::with_capacity(depth + 2);
        sizes.push(2);
        sizes.extend(std::iter::repeat(width).take(depth));
        sizes.push(cardinality);
        let net_a = PartyNet::random(sizes.clone(), activation, rng);
        let net_b = PartyNet::random(sizes.clone(), activation, rng);
        let net_c = PartyNet::random(sizes, activation, rng);
        Self { net_a, net_b, net_c, cardinality }
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn net(&self, party: Party) -> &PartyNet {
        match party {
            Party::A => &self.net_a,
            Party::B => &self.net_b,
            Party::C => &self.net_c,
        }
    }

    pub fn net_mut(&mut self, party: Party) -> &mut PartyNet {
        match party {
            Party::A => &mut self.net_a,
            Party::B => &mut self.net_b,
            Party::C => &mut self.net_c,
        }
    }

    pub fn num_params(&self) -> usize {
        self.net_a.num_params() + self.net_b.num_params() + self.net_c.num_params()
    }
}

/// One mini-batch of latent source values, uniform on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LatentBatch {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl LatentBatch {
    pub fn sample(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n];
        let mut gamma = vec![0.0; n];
        // Sample row-wise so a batch prefix equals a smaller batch.
        for i in 0..n {
            alpha[i] = rng.gen();
            beta[i] = rng.gen();
            gamma[i] = rng.gen();
        }
        Self { alpha, beta, gamma }
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Party network inputs for rows `lo..hi`, interleaved per row.
    pub(crate) fn party_inputs(&self, party: Party, lo: usize, hi: usize, out: &mut Vec<f64>) {
        out.clear();
        for i in lo..hi {
            let (x, y) = match party {
                Party::A => (self.beta[i], self.gamma[i]),
                Party::B => (self.gamma[i], self.alpha[i]),
                Party::C => (self.alpha[i], self.beta[i]),
            };
            out.push(x);
            out.push(y);
        }
    }
}

/// Monte Carlo estimate of the model's joint distribution over one batch:
/// the batch average of the product of the three parties' response vectors.
pub fn model_distribution(
    model: &TriangleModel,
    batch: &LatentBatch,
) -> Result<Distribution, TrainError> {
    let o = model.cardinality();
    let n = batch.len();
    if n == 0 {
        return Err(TrainError::EmptyBatch);
    }
    let nchunks = n.div_ceil(CHUNK);
    let partials: Vec<Vec<f64>> = (0..nchunks)
        .into_par_iter()
        .map(|k| {
            let lo = k * CHUNK;
            let hi = ((k + 1) * CHUNK).min(n);
            let m = hi - lo;
            let mut acts_a = ChunkActivations::new(&model.net_a, m);
            let mut acts_b = ChunkActivations::new(&model.net_b, m);
            let mut acts_c = ChunkActivations::new(&model.net_c, m);
            let mut input = Vec::with_capacity(m * 2);
            batch.party_inputs(Party::A, lo, hi, &mut input);
            model.net_a.forward_chunk(&input, m, &mut acts_a);
            batch.party_inputs(Party::B, lo, hi, &mut input);
            model.net_b.forward_chunk(&input, m, &mut acts_b);
            batch.party_inputs(Party::C, lo, hi, &mut input);
            model.net_c.forward_chunk(&input, m, &mut acts_c);
            let mut partial = vec![0.0; o * o * o];
            accumulate_joint(
                acts_a.output(m),
                acts_b.output(m),
                acts_c.output(m),
                m,
                o,
                &mut partial,
            );
            partial
        })
        .collect();
    let mut probs = vec![0.0; o * o * o];
    for partial in &partials {
        for (p, q) in probs.iter_mut().zip(partial) {
            *p += q;
        }
    }
    let scale = 1.0 / n as f64;
    for p in &mut probs {
        *p *= scale;
    }
    Distribution::new(o, probs).map_err(TrainError::InvalidModelDistribution)
}

/// `partial[abc] += sum_i A_i[a] B_i[b] C_i[c]` over `m` rows.
pub(crate) fn accumulate_joint(
    ya: &[f64],
    yb: &[f64],
    yc: &[f64],
    m: usize,
    o: usize,
    partial: &mut [f64],
) {
    let mut bc = vec![0.0; o * o];
    for i in 0..m {
        let a = &ya[i * o..(i + 1) * o];
        let b = &yb[i * o..(i + 1) * o];
        let c = &yc[i * o..(i + 1) * o];
        for bi in 0..o {
            let vb = b[bi];
            for ci in 0..o {
                bc[bi * o + ci] = vb * c[ci];
            }
        }
        for ai in 0..o {
            let va = a[ai];
            if va == 0.0 {
                continue;
            }
            let row = &mut partial[ai * o * o..(ai + 1) * o * o];
            for (pv, bv) in row.iter_mut().zip(&bc) {
                *pv += va * bv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn uniform_model(o: usize) -> TriangleModel {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut m = TriangleModel::random(o, 2, 4, Activation::Relu, &mut rng);
        for party in [Party::A, Party::B, Party::C] {
            let net = m.net_mut(party);
            for w in net.weights_mut() {
                w.fill(0.0);
            }
            for b in net.biases_mut() {
                b.fill(0.0);
            }
        }
        m
    }

    #[test]
    fn constant_uniform_nets_give_uniform_joint() {
        let model = uniform_model(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let batch = LatentBatch::sample(500, &mut rng);
        let d = model_distribution(&model, &batch).unwrap();
        for &p in d.probs() {
            assert!((p - 1.0 / 64.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_hot_nets_give_point_mass() {
        let mut model = uniform_model(4);
        // Saturate output biases: A -> 1, B -> 2, C -> 3.
        for (party, outcome) in [(Party::A, 1usize), (Party::B, 2), (Party::C, 3)] {
            let net = model.net_mut(party);
            net.biases_mut().last_mut().unwrap()[outcome] = 500.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let batch = LatentBatch::sample(200, &mut rng);
        let d = model_distribution(&model, &batch).unwrap();
        assert!((d.prob(1, 2, 3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chunked_estimate_is_independent_of_thread_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = TriangleModel::random(4, 3, 8, Activation::Tanh, &mut rng);
        let batch = LatentBatch::sample(5000, &mut rng);
        let a = model_distribution(&model, &batch).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| model_distribution(&model, &batch).unwrap());
        assert_eq!(a.probs(), b.probs());
    }

    #[test]
    fn latent_batches_are_deterministic_per_seed() {
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        let b1 = LatentBatch::sample(100, &mut r1);
        let b2 = LatentBatch::sample(100, &mut r2);
        assert_eq!(b1.alpha, b2.alpha);
        assert_eq!(b1.beta, b2.beta);
        assert_eq!(b1.gamma, b2.gamma);
        assert!(b1.alpha.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
}
