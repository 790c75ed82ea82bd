//! Discrepancy measures between target and model distributions.

use serde::{Deserialize, Serialize};

use crate::qdist::Distribution;

use super::TrainError;

/// Training loss. Relative entropy is the default; the squared and absolute
/// variants are accepted alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    #[default]
    Kl,
    Mse,
    Mae,
}

impl Loss {
    pub fn name(&self) -> &'static str {
        match self {
            Loss::Kl => "kl",
            Loss::Mse => "mse",
            Loss::Mae => "mae",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "kl" => Some(Loss::Kl),
            "mse" => Some(Loss::Mse),
            "mae" => Some(Loss::Mae),
            _ => None,
        }
    }
}

/// `sum_s p_t(s) ln(p_t(s) / p_M(s))`; outcomes with `p_t = 0` contribute
/// nothing, and a vanishing model probability on the target's support is an
/// error (softmax outputs never produce one).
pub fn kl_divergence(target: &Distribution, model: &Distribution) -> Result<f64, TrainError> {
    if target.cardinality() != model.cardinality() {
        return Err(TrainError::CardinalityMismatch {
            target: target.cardinality(),
            model: model.cardinality(),
        });
    }
    let mut total = 0.0;
    for (i, (&pt, &pm)) in target.probs().iter().zip(model.probs()).enumerate() {
        if pt == 0.0 {
            continue;
        }
        if pm <= 0.0 {
            return Err(TrainError::ZeroModelProbability { index: i });
        }
        total += pt * (pt / pm).ln();
    }
    Ok(total.max(0.0))
}

/// Loss value and gradient with respect to the model probabilities, both
/// over raw (unvalidated) model entries as produced mid-training.
pub(crate) fn value_and_grad(
    loss: Loss,
    target: &[f64],
    model: &[f64],
    grad: &mut [f64],
) -> Result<f64, TrainError> {
    let k = target.len();
    debug_assert_eq!(model.len(), k);
    debug_assert_eq!(grad.len(), k);
    let mut value = 0.0;
    match loss {
        Loss::Kl => {
            for i in 0..k {
                let (pt, pm) = (target[i], model[i]);
                if pt == 0.0 {
                    grad[i] = 0.0;
                    continue;
                }
                if pm <= 0.0 {
                    return Err(TrainError::ZeroModelProbability { index: i });
                }
                value += pt * (pt / pm).ln();
                grad[i] = -pt / pm;
            }
        }
        Loss::Mse => {
            let scale = 1.0 / k as f64;
            for i in 0..k {
                let d = model[i] - target[i];
                value += d * d * scale;
                grad[i] = 2.0 * d * scale;
            }
        }
        Loss::Mae => {
            let scale = 1.0 / k as f64;
            for i in 0..k {
                let d = model[i] - target[i];
                value += d.abs() * scale;
                grad[i] = d.signum() * scale;
            }
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_distribution(o: usize, rng: &mut ChaCha8Rng) -> Distribution {
        let n = o * o * o;
        let mut probs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        Distribution::new(o, probs).unwrap()
    }

    #[test]
    fn divergence_of_identical_distributions_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = random_distribution(4, &mut rng);
        assert_eq!(kl_divergence(&d, &d).unwrap(), 0.0);
    }

    #[test]
    fn point_mass_against_uniform_is_log_64() {
        let mut probs = vec![0.0; 64];
        probs[17] = 1.0;
        let point = Distribution::new(4, probs).unwrap();
        let uniform = Distribution::uniform(4);
        let kl = kl_divergence(&point, &uniform).unwrap();
        assert!((kl - 64.0f64.ln()).abs() < 1e-12);
        assert!((kl - 4.158883083359672).abs() < 1e-12);
    }

    #[test]
    fn divergence_is_nonnegative_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let p = random_distribution(2, &mut rng);
            let q = random_distribution(2, &mut rng);
            assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
        }
    }

    #[test]
    fn zero_model_probability_on_support_is_an_error() {
        let mut probs = vec![0.0; 8];
        probs[0] = 1.0;
        let point = Distribution::new(2, probs).unwrap();
        let mut q = vec![1.0 / 7.0; 8];
        q[0] = 0.0;
        let degenerate = Distribution::new(2, q).unwrap();
        assert!(matches!(
            kl_divergence(&point, &degenerate),
            Err(TrainError::ZeroModelProbability { index: 0 })
        ));
    }

    #[test]
    fn cardinality_mismatch_is_an_error() {
        let p = Distribution::uniform(2);
        let q = Distribution::uniform(4);
        assert!(matches!(kl_divergence(&p, &q), Err(TrainError::CardinalityMismatch { .. })));
    }
}
