//! Distance metrics between distributions.

use crate::qdist::Distribution;

use super::AnalysisError;

/// Euclidean distance `sqrt(sum_s (p(s) - q(s))^2)`.
pub fn euclidean_distance(p: &Distribution, q: &Distribution) -> Result<f64, AnalysisError> {
    if p.cardinality() != q.cardinality() {
        return Err(AnalysisError::CardinalityMismatch {
            left: p.cardinality(),
            right: q.cardinality(),
        });
    }
    Ok(euclidean_distance_raw(p.probs(), q.probs()))
}

pub(crate) fn euclidean_distance_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Total variation distance `max_S |p(S) - q(S)| = (1/2) sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
