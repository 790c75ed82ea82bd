//! The triangle quantum setup and its outcome distribution.

use num_complex::Complex64;

use super::distribution::Distribution;
use super::matrix::{kron, permute_qubits};
use super::states::{PartyMeasurement, TwoQubitState};
use super::QdistError;

/// Three two-qubit sources and three four-outcome measurements arranged on
/// the triangle: source alpha links Bob and Charlie, beta links Alice and
/// Charlie, gamma links Alice and Bob. Each party measures the pair of
/// qubits it receives, ordered as Alice `(beta, gamma)`, Bob
/// `(gamma, alpha)`, Charlie `(alpha, beta)`.
#[derive(Debug, Clone)]
pub struct TriangleQuantumSetup {
    pub source_alpha: TwoQubitState,
    pub source_beta: TwoQubitState,
    pub source_gamma: TwoQubitState,
    pub meas_a: PartyMeasurement,
    pub meas_b: PartyMeasurement,
    pub meas_c: PartyMeasurement,
}

impl TriangleQuantumSetup {
    pub fn outcome_cardinality(&self) -> usize {
        self.meas_a.outcomes()
    }
}

/// Global qubit order used for the six-qubit state:
/// `[A-beta, A-gamma, B-gamma, B-alpha, C-alpha, C-beta]`, so that the
/// parties' measurement operators combine as a plain triple tensor product.
/// Sources are laid down as `rho_beta (x) rho_gamma (x) rho_alpha` with each
/// source's first factor going to the alphabetically first party holding it,
/// which is the order `[A-beta, C-beta, A-gamma, B-gamma, B-alpha, C-alpha]`.
const SOURCE_TO_GLOBAL: [usize; 6] = [0, 5, 1, 2, 3, 4];

/// Outcome distribution of a triangle setup: `p(abc) = Tr[(A_a (x) B_b (x)
/// C_c) rho]` with `rho` the permuted product of the three source states.
pub fn born_distribution(setup: &TriangleQuantumSetup) -> Result<Distribution, QdistError> {
    let o = setup.outcome_cardinality();
    if setup.meas_b.outcomes() != o || setup.meas_c.outcomes() != o {
        return Err(QdistError::InvalidDistribution {
            reason: "parties disagree on outcome cardinality".into(),
        });
    }
    let sources = kron(
        &kron(setup.source_beta.rho(), setup.source_gamma.rho()),
        setup.source_alpha.rho(),
    );
    let rho = permute_qubits(&sources, &SOURCE_TO_GLOBAL)?;

    // Tr[(A (x) B (x) C) rho] accumulated over per-party 4x4 index pairs
    // rather than materializing 64x64 operators.
    let mut probs = vec![0.0; o * o * o];
    for a in 0..o {
        for b in 0..o {
            for c in 0..o {
                let ma = setup.meas_a.element(a);
                let mb = setup.meas_b.element(b);
                let mc = setup.meas_c.element(c);
                let mut acc = Complex64::new(0.0, 0.0);
                for r1 in 0..4 {
                    for c1 in 0..4 {
                        let va = ma.get(r1, c1);
                        if va.norm_sqr() == 0.0 {
                            continue;
                        }
                        for r2 in 0..4 {
                            for c2 in 0..4 {
                                let vab = va * mb.get(r2, c2);
                                if vab.norm_sqr() == 0.0 {
                                    continue;
                                }
                                for r3 in 0..4 {
                                    for c3 in 0..4 {
                                        let row = (c1 * 16 + c2 * 4 + c3) as usize;
                                        let col = (r1 * 16 + r2 * 4 + r3) as usize;
                                        acc += vab * mc.get(r3, c3) * rho.get(row, col);
                                    }
                                }
                            }
                        }
                    }
                }
                probs[(a * o + b) * o + c] = acc.re;
            }
        }
    }
    Distribution::new(o, probs)
}
