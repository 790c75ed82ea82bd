//! Sampling and rendering party response functions.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::trainer::{Party, TriangleModel};

use super::AnalysisError;

/// Categorical samples of one party's response over a latent grid.
#[derive(Debug, Clone)]
pub struct ResponseSample {
    pub party: Party,
    pub resolution: usize,
    pub samples_per_point: usize,
    /// `(latent1, latent2, outcome)` triples, grid-major then sample-major.
    pub records: Vec<(f64, f64, u8)>,
}

/// Evaluates the party network on a `resolution x resolution` grid of cell
/// centers over the unit square and draws `samples_per_point` outcomes per
/// grid point.
pub fn response_sample(
    model: &TriangleModel,
    party: Party,
    resolution: usize,
    samples_per_point: usize,
    seed: u64,
) -> Result<ResponseSample, AnalysisError> {
    if resolution < 2 {
        return Err(AnalysisError::BadResolution { found: resolution });
    }
    let net = model.net(party);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(resolution * resolution * samples_per_point);
    for i in 0..resolution {
        let x = (i as f64 + 0.5) / resolution as f64;
        for j in 0..resolution {
            let y = (j as f64 + 0.5) / resolution as f64;
            let probs = net.forward([x, y]);
            for _ in 0..samples_per_point {
                let r: f64 = rng.gen();
                let mut cdf = 0.0;
                let mut outcome = probs.len() - 1;
                for (k, &p) in probs.iter().enumerate() {
                    cdf += p;
                    if r < cdf {
                        outcome = k;
                        break;
                    }
                }
                records.push((x, y, outcome as u8));
            }
        }
    }
    Ok(ResponseSample { party, resolution, samples_per_point, records })
}

/// Exact response probabilities on the same grid, one row per grid point in
/// the sampling order. Useful for comparing two models' responses without
/// sampling noise.
pub fn response_grid(model: &TriangleModel, party: Party, resolution: usize) -> Vec<Vec<f64>> {
    let net = model.net(party);
    let mut rows = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        let x = (i as f64 + 0.5) / resolution as f64;
        for j in 0..resolution {
            let y = (j as f64 + 0.5) / resolution as f64;
            rows.push(net.forward([x, y]));
        }
    }
    rows
}

impl ResponseSample {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.records.len() * 24 + 24);
        out.push_str("latent1,latent2,outcome\n");
        for (x, y, o) in &self.records {
            let _ = writeln!(out, "{x},{y},{o}");
        }
        out
    }

    /// Scatter rendering: one dot per sample, colored by outcome from a
    /// fixed four-color palette at opacity 0.1.
    pub fn to_svg(&self) -> String {
        const PALETTE: [&str; 4] = ["#e41a1c", "#377eb8", "#4daf4a", "#ffcc00"];
        const SIZE: f64 = 640.0;
        const MARGIN: f64 = 20.0;
        let span = SIZE - 2.0 * MARGIN;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" \
             viewBox=\"0 0 {SIZE} {SIZE}\">"
        );
        let _ = writeln!(
            out,
            "<rect x=\"0\" y=\"0\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>"
        );
        for (x, y, o) in &self.records {
            let px = MARGIN + x * span;
            let py = SIZE - MARGIN - y * span;
            let color = PALETTE[(*o as usize) % PALETTE.len()];
            let _ = writeln!(
                out,
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"{color}\" \
                 fill-opacity=\"0.1\"/>"
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::{Activation, TriangleModel};
    use rand::SeedableRng;

    fn model() -> TriangleModel {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        TriangleModel::random(4, 2, 6, Activation::Relu, &mut rng)
    }

    #[test]
    fn record_count_is_grid_times_samples() {
        let s = response_sample(&model(), Party::B, 7, 30, 1).unwrap();
        assert_eq!(s.records.len(), 7 * 7 * 30);
    }

    #[test]
    fn deterministic_nets_sample_identically_per_point() {
        let mut m = model();
        m.net_mut(Party::A).biases_mut().last_mut().unwrap()[2] = 400.0;
        let s = response_sample(&m, Party::A, 4, 10, 3).unwrap();
        for chunk in s.records.chunks(10) {
            assert!(chunk.iter().all(|r| r.2 == chunk[0].2));
        }
    }

    #[test]
    fn resolution_below_two_is_rejected() {
        assert!(matches!(
            response_sample(&model(), Party::C, 1, 5, 0),
            Err(AnalysisError::BadResolution { found: 1 })
        ));
    }

    #[test]
    fn csv_and_svg_have_expected_shape() {
        let s = response_sample(&model(), Party::B, 3, 2, 9).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("latent1,latent2,outcome\n"));
        assert_eq!(csv.lines().count(), 1 + 3 * 3 * 2);
        let svg = s.to_svg();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<circle").count(), 3 * 3 * 2);
    }
}
