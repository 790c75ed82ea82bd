//! Exact generation of the quantum target distributions.
//!
//! Builds the triangle-network target families from first principles:
//! complex matrices, two-qubit source states, four-outcome measurements, and
//! the Born rule on the permuted six-qubit product state. All operations are
//! pure functions of their inputs and safe to share across threads.

mod born;
mod distribution;
mod families;
mod matrix;
mod states;

pub use born::{born_distribution, TriangleQuantumSetup};
pub use distribution::Distribution;
pub use families::{
    elegant_basis, elegant_family, elegant_setup, fritz_family, fritz_setup, renou_basis,
    renou_family, renou_setup, ElegantNoise, Family, FamilySpec, RenouNoise, TETRAHEDRON,
};
pub use matrix::{kron, kron_all, permute_qubits, ComplexMatrix, DEFAULT_MATRIX_TOL};
pub use states::{
    bloch_ket, bloch_ket_antipodal, ket0, ket1, noisy_povm, observable_eigenvector, pauli_x,
    pauli_y, pauli_z, phi_plus, singlet, werner_state, PartyMeasurement, TwoQubitState,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QdistError {
    #[error("matrix is {rows}x{cols}, expected square of the right dimension")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension {dim} does not match 2^{qubits}")]
    BadQubitDimension { dim: usize, qubits: usize },
    #[error("invalid qubit permutation {perm:?}")]
    InvalidPermutation { perm: Vec<usize> },
    #[error("parameter {name} = {value} outside [{min}, {max}]")]
    ParamOutOfRange { name: &'static str, value: f64, min: f64, max: f64 },
    #[error("missing required parameter {name}")]
    MissingParameter { name: &'static str },
    #[error("matrix deviates from Hermitian by {deviation}")]
    NotHermitian { deviation: f64 },
    #[error("matrix has eigenvalue {min_eigenvalue} below tolerance")]
    NotPositive { min_eigenvalue: f64 },
    #[error("state has trace {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("ket has norm {norm}, expected 1")]
    NotNormalized { norm: f64 },
    #[error("measurement elements sum deviates from identity by {deviation}")]
    IncompleteMeasurement { deviation: f64 },
    #[error("invalid distribution: {reason}")]
    InvalidDistribution { reason: String },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
