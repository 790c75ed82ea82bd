//! Joint outcome distributions over the triangle's three parties.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::QdistError;

/// Entries below this are clamped to zero on construction; anything more
/// negative is rejected.
const NEGATIVE_CLAMP: f64 = 1e-12;
/// Allowed deviation of the entry sum from one, before renormalizing.
const SUM_TOL: f64 = 1e-9;
/// Drift below this is left alone so that file round-trips are bit-exact.
const RENORM_EPS: f64 = 1e-13;

/// A probability vector over the `o^3` joint outcomes `(a, b, c)`, flat
/// index `a*o^2 + b*o + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    cardinality: usize,
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates, clamps tiny negatives to zero, and renormalizes float
    /// drift as long as the sum is within tolerance of one.
    pub fn new(cardinality: usize, probs: Vec<f64>) -> Result<Self, QdistError> {
        let expected = cardinality * cardinality * cardinality;
        if probs.len() != expected {
            return Err(QdistError::InvalidDistribution {
                reason: format!(
                    "expected {} entries for cardinality {}, found {}",
                    expected,
                    cardinality,
                    probs.len()
                ),
            });
        }
        let mut clamped = probs;
        for p in &mut clamped {
            if !p.is_finite() {
                return Err(QdistError::InvalidDistribution {
                    reason: format!("non-finite entry {p}"),
                });
            }
            if *p < -NEGATIVE_CLAMP {
                return Err(QdistError::InvalidDistribution {
                    reason: format!("negative entry {p} below clamp threshold"),
                });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = clamped.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(QdistError::InvalidDistribution {
                reason: format!("entries sum to {sum}, outside tolerance of 1"),
            });
        }
        if (sum - 1.0).abs() > RENORM_EPS {
            for p in &mut clamped {
                *p /= sum;
            }
        }
        Ok(Self { cardinality, probs: clamped })
    }

    /// Uniform distribution over all `o^3` outcomes.
    pub fn uniform(cardinality: usize) -> Self {
        let n = cardinality * cardinality * cardinality;
        Self { cardinality, probs: vec![1.0 / n as f64; n] }
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    #[inline]
    pub fn flat_index(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.cardinality + b) * self.cardinality + c
    }

    #[inline]
    pub fn prob(&self, a: usize, b: usize, c: usize) -> f64 {
        self.probs[self.flat_index(a, b, c)]
    }

    /// Marginal over one party: 0 = a, 1 = b, 2 = c.
    pub fn marginal(&self, party: usize) -> Vec<f64> {
        let o = self.cardinality;
        let mut out = vec![0.0; o];
        for a in 0..o {
            for b in 0..o {
                for c in 0..o {
                    let idx = match party {
                        0 => a,
                        1 => b,
                        _ => c,
                    };
                    out[idx] += self.prob(a, b, c);
                }
            }
        }
        out
    }

    /// CSV with header `a,b,c,p`, rows in lexicographic `(a,b,c)` order,
    /// probabilities printed with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let o = self.cardinality;
        let mut out = String::with_capacity(self.probs.len() * 28 + 8);
        out.push_str("a,b,c,p\n");
        for a in 0..o {
            for b in 0..o {
                for c in 0..o {
                    let _ = writeln!(out, "{a},{b},{c},{:.16e}", self.prob(a, b, c));
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, QdistError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "a,b,c,p" => {}
            Some((_, header)) => {
                return Err(QdistError::Format {
                    line: 1,
                    message: format!("expected header `a,b,c,p`, found `{header}`"),
                })
            }
            None => {
                return Err(QdistError::Format { line: 1, message: "empty file".into() })
            }
        }
        let mut rows: Vec<(usize, usize, usize, f64)> = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(QdistError::Format {
                    line: i + 1,
                    message: format!("expected 4 comma-separated fields, found {}", fields.len()),
                });
            }
            let parse_idx = |s: &str| -> Result<usize, QdistError> {
                s.trim().parse().map_err(|_| QdistError::Format {
                    line: i + 1,
                    message: format!("bad outcome index `{s}`"),
                })
            };
            let a = parse_idx(fields[0])?;
            let b = parse_idx(fields[1])?;
            let c = parse_idx(fields[2])?;
            let p: f64 = fields[3].trim().parse().map_err(|_| QdistError::Format {
                line: i + 1,
                message: format!("bad probability `{}`", fields[3]),
            })?;
            rows.push((a, b, c, p));
        }
        let n = rows.len();
        let cardinality = (0..=6)
            .find(|o: &usize| o * o * o == n)
            .ok_or_else(|| QdistError::InvalidDistribution {
                reason: format!("{n} rows is not a cube of a small cardinality"),
            })?;
        let mut probs = vec![0.0; n];
        for (row, (a, b, c, p)) in rows.iter().enumerate() {
            let expected = (
                row / (cardinality * cardinality),
                (row / cardinality) % cardinality,
                row % cardinality,
            );
            if (*a, *b, *c) != expected {
                return Err(QdistError::Format {
                    line: row + 2,
                    message: format!(
                        "outcomes out of lexicographic order: expected {:?}, found {:?}",
                        expected,
                        (a, b, c)
                    ),
                });
            }
            probs[row] = *p;
        }
        Self::new(cardinality, probs)
    }

    /// JSON variant: `{"cardinality": o, "probs": [...]}` in the same flat
    /// order as the CSV rows.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, QdistError> {
        let raw: Distribution = serde_json::from_str(text)?;
        Self::new(raw.cardinality, raw.probs)
    }

    /// Writes CSV or JSON depending on the path extension (`.json` selects
    /// the JSON variant, anything else CSV).
    pub fn write_file(&self, path: &Path) -> Result<(), QdistError> {
        let body = if path.extension().is_some_and(|e| e == "json") {
            self.to_json()
        } else {
            self.to_csv()
        };
        std::fs::write(path, body)?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, QdistError> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_tiny_negatives() {
        let probs = vec![0.5, 0.5 - 5e-13, 0.0, 5e-13, 0.0, -5e-13, 5e-13, 0.0];
        let d = Distribution::new(2, probs).unwrap();
        assert_eq!(d.prob(1, 0, 1), 0.0);
        let sum: f64 = d.probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_large_negative() {
        let mut probs = vec![1.0 / 8.0; 8];
        probs[0] = -1e-6;
        assert!(Distribution::new(2, probs).is_err());
    }

    #[test]
    fn rejects_bad_sum() {
        let probs = vec![1.0 / 8.0; 8].iter().map(|p| p * 1.01).collect();
        assert!(Distribution::new(2, probs).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let probs: Vec<f64> = (0..64).map(|i| i as f64 + 0.373 ).collect();
        let total: f64 = probs.iter().sum();
        let probs: Vec<f64> = probs.into_iter().map(|p| p / total).collect();
        let d = Distribution::new(4, probs).unwrap();
        let back = Distribution::from_csv(&d.to_csv()).unwrap();
        assert_eq!(d.probs(), back.probs());
    }

    #[test]
    fn csv_has_17_significant_digits() {
        let d = Distribution::uniform(4);
        let csv = d.to_csv();
        let row = csv.lines().nth(1).unwrap();
        let p = row.rsplit(',').next().unwrap();
        // 1.5625000000000000e-2 style: one leading digit plus 16 fractional.
        assert_eq!(p, "1.5625000000000000e-2");
    }

    #[test]
    fn csv_rejects_bad_header() {
        assert!(matches!(
            Distribution::from_csv("a,b,p\n0,0,0,1.0\n"),
            Err(QdistError::Format { line: 1, .. })
        ));
    }

    #[test]
    fn csv_rejects_out_of_order_rows() {
        let d = Distribution::uniform(2);
        let mut lines: Vec<String> = d.to_csv().lines().map(String::from).collect();
        lines.swap(1, 2);
        let err = Distribution::from_csv(&lines.join("\n")).unwrap_err();
        assert!(matches!(err, QdistError::Format { line: 2, .. }));
    }

    #[test]
    fn json_round_trip() {
        let d = Distribution::uniform(2);
        let back = Distribution::from_json(&d.to_json()).unwrap();
        assert_eq!(d.probs(), back.probs());
    }

    #[test]
    fn marginals_sum_to_one() {
        let d = Distribution::uniform(4);
        for party in 0..3 {
            let m = d.marginal(party);
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(m.iter().all(|&p| (p - 0.25).abs() < 1e-12));
        }
    }
}
