//! Qubit states, two-qubit density matrices, and four-outcome measurements.

use num_complex::Complex64;

use super::matrix::{kron, ComplexMatrix};
use super::QdistError;

const HERMITIAN_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `|0>` and `|1>`.
pub fn ket0() -> ComplexMatrix {
    ComplexMatrix::ket(&[c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn ket1() -> ComplexMatrix {
    ComplexMatrix::ket(&[c(0.0, 0.0), c(1.0, 0.0)])
}

/// Singlet `(|01> - |10>)/sqrt(2)`.
pub fn singlet() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::ket(&[c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)])
}

/// `(|00> + |11>)/sqrt(2)`.
pub fn phi_plus() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::ket(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)])
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_entries(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_entries(2, 2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_entries(2, 2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// The +1 eigenstate of `n . sigma` for a unit Bloch vector `n`, with the
/// global phase fixed so the first amplitude is real and nonnegative, and
/// `|1>` exactly when that amplitude vanishes.
pub fn bloch_ket(n: [f64; 3]) -> ComplexMatrix {
    let [x, y, z] = n;
    let cos_half = ((1.0 + z) / 2.0).max(0.0).sqrt();
    let sin_half = ((1.0 - z) / 2.0).max(0.0).sqrt();
    if cos_half < 1e-15 {
        return ket1();
    }
    let transverse = (x * x + y * y).sqrt();
    let phase = if transverse < 1e-15 { c(1.0, 0.0) } else { c(x / transverse, y / transverse) };
    ComplexMatrix::ket(&[c(cos_half, 0.0), phase * sin_half])
}

/// The antipodal companion of [`bloch_ket`]: a state with Bloch vector `-n`,
/// phased as `-sigma_y |m>^*` so that tetrahedral joint-measurement bases
/// built from `|m, -m>` pairs come out orthonormal.
pub fn bloch_ket_antipodal(n: [f64; 3]) -> ComplexMatrix {
    let m = bloch_ket(n);
    let a0 = m.get(0, 0).conj();
    let a1 = m.get(1, 0).conj();
    // -sigma_y conj(m) = (i*conj(a1), -i*conj(a0)).
    ComplexMatrix::ket(&[c(0.0, 1.0) * a1, c(0.0, -1.0) * a0])
}

/// Eigenvector of a single-qubit observable picked by a result bit:
/// bit 0 selects the +1 eigenstate, bit 1 the -1 eigenstate.
pub fn observable_eigenvector(direction: [f64; 3], result_bit: u8) -> ComplexMatrix {
    if result_bit == 0 {
        bloch_ket(direction)
    } else {
        bloch_ket([-direction[0], -direction[1], -direction[2]])
    }
}

/// A validated 4x4 two-qubit density matrix.
#[derive(Debug, Clone)]
pub struct TwoQubitState {
    rho: ComplexMatrix,
}

impl TwoQubitState {
    pub fn new(rho: ComplexMatrix) -> Result<Self, QdistError> {
        if rho.rows() != 4 || rho.cols() != 4 {
            return Err(QdistError::NotSquare { rows: rho.rows(), cols: rho.cols() });
        }
        let herm = rho.hermiticity_deviation();
        if herm > HERMITIAN_TOL {
            return Err(QdistError::NotHermitian { deviation: herm });
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(QdistError::TraceNotOne { trace: tr.re });
        }
        let min_eig = rho.hermitian_eigenvalues()[0];
        if min_eig < -PSD_TOL {
            return Err(QdistError::NotPositive { min_eigenvalue: min_eig });
        }
        Ok(Self { rho })
    }

    /// Pure state `|psi><psi|` from a normalized two-qubit ket.
    pub fn pure(ket: &ComplexMatrix) -> Result<Self, QdistError> {
        Self::new(ket.outer())
    }

    /// Classically correlated bit pair `(|00><00| + |11><11|)/2`.
    pub fn correlated_bits() -> Self {
        let k00 = kron(&ket0(), &ket0());
        let k11 = kron(&ket1(), &ket1());
        let rho = k00.outer().scale(c(0.5, 0.0)).add(&k11.outer().scale(c(0.5, 0.0)));
        Self::new(rho).expect("correlated bit pair is a valid state")
    }

    /// Maximally mixed two-qubit state `I/4`.
    pub fn maximally_mixed() -> Self {
        Self::new(ComplexMatrix::identity(4).scale(c(0.25, 0.0)))
            .expect("I/4 is a valid state")
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }
}

/// `v |base><base| + (1 - v) I/4` for a normalized two-qubit ket.
pub fn werner_state(base: &ComplexMatrix, v: f64) -> Result<TwoQubitState, QdistError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(QdistError::ParamOutOfRange { name: "v", value: v, min: 0.0, max: 1.0 });
    }
    if base.rows() != 4 || base.cols() != 1 {
        return Err(QdistError::NotSquare { rows: base.rows(), cols: base.cols() });
    }
    let norm: f64 = base.entries().iter().map(|e| e.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(QdistError::NotNormalized { norm: norm.sqrt() });
    }
    let rho = base
        .outer()
        .scale(c(v, 0.0))
        .add(&ComplexMatrix::identity(4).scale(c((1.0 - v) / 4.0, 0.0)));
    TwoQubitState::new(rho)
}

/// A four-outcome measurement on a party's pair of qubits: positive 4x4
/// elements summing to the identity.
#[derive(Debug, Clone)]
pub struct PartyMeasurement {
    elements: Vec<ComplexMatrix>,
}

impl PartyMeasurement {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self, QdistError> {
        let mut sum = ComplexMatrix::zeros(4, 4);
        for e in &elements {
            if e.rows() != 4 || e.cols() != 4 {
                return Err(QdistError::NotSquare { rows: e.rows(), cols: e.cols() });
            }
            let herm = e.hermiticity_deviation();
            if herm > HERMITIAN_TOL {
                return Err(QdistError::NotHermitian { deviation: herm });
            }
            let min_eig = e.hermitian_eigenvalues()[0];
            if min_eig < -PSD_TOL {
                return Err(QdistError::NotPositive { min_eigenvalue: min_eig });
            }
            sum = sum.add(e);
        }
        let identity = ComplexMatrix::identity(4);
        let mut dev: f64 = 0.0;
        for r in 0..4 {
            for cc in 0..4 {
                dev = dev.max((sum.get(r, cc) - identity.get(r, cc)).norm());
            }
        }
        if dev > COMPLETENESS_TOL {
            return Err(QdistError::IncompleteMeasurement { deviation: dev });
        }
        Ok(Self { elements })
    }

    /// Projective measurement onto an orthonormal set of two-qubit kets,
    /// one outcome per ket.
    pub fn projective(kets: &[ComplexMatrix]) -> Result<Self, QdistError> {
        Self::new(kets.iter().map(|k| k.outer()).collect())
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn element(&self, i: usize) -> &ComplexMatrix {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }
}

/// Mixes every element with white noise: `e -> v e + (1 - v) I/4`.
///
/// Equivalent to each detector independently defaulting to a uniformly
/// random outcome with probability `1 - v`.
pub fn noisy_povm(m: &PartyMeasurement, v: f64) -> Result<PartyMeasurement, QdistError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(QdistError::ParamOutOfRange { name: "v", value: v, min: 0.0, max: 1.0 });
    }
    let white = ComplexMatrix::identity(4).scale(c((1.0 - v) / 4.0, 0.0));
    let elements = m
        .elements
        .iter()
        .map(|e| e.scale(c(v, 0.0)).add(&white))
        .collect();
    PartyMeasurement::new(elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdist::matrix::DEFAULT_MATRIX_TOL;

    #[test]
    fn werner_at_full_visibility_is_pure() {
        let w = werner_state(&singlet(), 1.0).unwrap();
        assert!(w.rho().approx_eq(&singlet().outer(), DEFAULT_MATRIX_TOL));
    }

    #[test]
    fn werner_at_zero_visibility_is_maximally_mixed() {
        let w = werner_state(&singlet(), 0.0).unwrap();
        let mixed = ComplexMatrix::identity(4).scale(c(0.25, 0.0));
        assert!(w.rho().approx_eq(&mixed, DEFAULT_MATRIX_TOL));
    }

    #[test]
    fn werner_is_unit_trace_hermitian_for_any_v() {
        for &v in &[0.1, 0.37, 0.5, 0.9] {
            let w = werner_state(&phi_plus(), v).unwrap();
            assert!((w.rho().trace().re - 1.0).abs() < 1e-12);
            assert!(w.rho().hermiticity_deviation() < 1e-14);
        }
    }

    #[test]
    fn werner_rejects_out_of_range_visibility() {
        assert!(werner_state(&singlet(), -0.01).is_err());
        assert!(werner_state(&singlet(), 1.01).is_err());
    }

    #[test]
    fn werner_eigenvalues_match_closed_form() {
        let v = 0.6;
        let w = werner_state(&singlet(), v).unwrap();
        let eigs = w.rho().hermitian_eigenvalues();
        // Triple (1-v)/4 plus a single (1+3v)/4.
        for e in &eigs[..3] {
            assert!((e - (1.0 - v) / 4.0).abs() < 1e-12);
        }
        assert!((eigs[3] - (1.0 + 3.0 * v) / 4.0).abs() < 1e-12);
    }

    fn computational_basis_measurement() -> PartyMeasurement {
        let kets: Vec<ComplexMatrix> = (0..4)
            .map(|i| {
                let mut amps = [c(0.0, 0.0); 4];
                amps[i] = c(1.0, 0.0);
                ComplexMatrix::ket(&amps)
            })
            .collect();
        PartyMeasurement::projective(&kets).unwrap()
    }

    #[test]
    fn noisy_povm_identity_at_full_efficiency() {
        let m = computational_basis_measurement();
        let noisy = noisy_povm(&m, 1.0).unwrap();
        for i in 0..4 {
            assert!(noisy.element(i).approx_eq(m.element(i), DEFAULT_MATRIX_TOL));
        }
    }

    #[test]
    fn noisy_povm_white_noise_at_zero_efficiency() {
        let m = computational_basis_measurement();
        let noisy = noisy_povm(&m, 0.0).unwrap();
        let white = ComplexMatrix::identity(4).scale(c(0.25, 0.0));
        for i in 0..4 {
            assert!(noisy.element(i).approx_eq(&white, DEFAULT_MATRIX_TOL));
        }
    }

    #[test]
    fn noisy_povm_remains_complete() {
        let m = computational_basis_measurement();
        for &v in &[0.0, 0.3, 0.77, 1.0] {
            // Constructor re-validates completeness, so success is the assertion.
            assert!(noisy_povm(&m, v).is_ok());
        }
    }

    #[test]
    fn bloch_ket_poles_and_equator() {
        assert!(bloch_ket([0.0, 0.0, 1.0]).approx_eq(&ket0(), DEFAULT_MATRIX_TOL));
        assert!(bloch_ket([0.0, 0.0, -1.0]).approx_eq(&ket1(), DEFAULT_MATRIX_TOL));
        let plus = bloch_ket([1.0, 0.0, 0.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(plus.approx_eq(&ComplexMatrix::ket(&[c(s, 0.0), c(s, 0.0)]), DEFAULT_MATRIX_TOL));
    }

    #[test]
    fn bloch_ket_is_eigenvector() {
        let n = [0.48, -0.6, 0.64];
        let m = bloch_ket(n);
        let obs = pauli_x()
            .scale(c(n[0], 0.0))
            .add(&pauli_y().scale(c(n[1], 0.0)))
            .add(&pauli_z().scale(c(n[2], 0.0)));
        let applied = obs.matmul(&m);
        assert!(applied.approx_eq(&m, 1e-12));
    }

    #[test]
    fn antipodal_ket_points_opposite() {
        let n = [0.6, 0.64, -0.48];
        let anti = bloch_ket_antipodal(n);
        let obs = pauli_x()
            .scale(c(-n[0], 0.0))
            .add(&pauli_y().scale(c(-n[1], 0.0)))
            .add(&pauli_z().scale(c(-n[2], 0.0)));
        let applied = obs.matmul(&anti);
        assert!(applied.approx_eq(&anti, 1e-12));
    }
}
