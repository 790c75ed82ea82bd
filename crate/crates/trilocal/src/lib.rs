//! Learnability-based membership tests for the local set of the triangle
//! causal network.
//!
//! The triangle network has three parties (Alice, Bob, Charlie), each pair
//! connected by one independent source and no party receiving an input. This
//! crate decides whether a given outcome distribution `p(abc)` is compatible
//! with purely classical sources by training a causal-structure-constrained
//! neural network to reproduce it: three per-party feedforward networks fed
//! by shared uniform latents, combined through a Monte Carlo estimate of the
//! joint distribution. A distribution is certified local when the network
//! learns it; families of noisy targets whose learned distance lifts off at
//! some noise level give an estimate of where the family exits the local set.
//!
//! The crate is organized around four pieces:
//!
//! * [`qdist`] — exact complex linear algebra that builds the quantum target
//!   distributions (Fritz, Elegant, Renou families) under visibility and
//!   detector noise.
//! * [`trainer`] — the constrained network, its from-scratch gradient engine,
//!   and the training loop with restarts.
//! * [`analysis`] — distance metrics, noise sweeps, cross-model smoothing,
//!   exit-point fitting, response sampling, and an exact brute-force oracle
//!   for binary outputs.
//! * [`cli`] — configuration parsing and job dispatch for the `trilocal`
//!   binary.

pub mod analysis;
pub mod cli;
pub mod qdist;
pub mod seed;
pub mod trainer;

pub use qdist::Distribution;
pub use trainer::{TrainConfig, TriangleModel};
