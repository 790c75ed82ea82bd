//! Dense complex matrices sized for few-qubit operators.
//!
//! Everything in the target generators lives on at most six qubits, so the
//! matrices here top out at 64x64. Storage is row-major and operations are
//! written directly; there is no attempt at sparsity or blocking.

use num_complex::Complex64;

use super::QdistError;

/// Absolute per-entry tolerance used by [`ComplexMatrix::approx_eq`].
pub const DEFAULT_MATRIX_TOL: f64 = 1e-12;

/// A dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must equal rows*cols");
        Self { rows, cols, entries }
    }

    /// Column vector from amplitudes.
    pub fn ket(amplitudes: &[Complex64]) -> Self {
        Self::from_entries(amplitudes.len(), 1, amplitudes.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn scale(&self, f: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e * f).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert_eq!(self.rows, self.cols, "trace of a non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// `|psi><psi|` for a column vector.
    pub fn outer(&self) -> Self {
        assert_eq!(self.cols, 1, "outer product expects a column vector");
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, self.entries[r] * self.entries[c].conj());
            }
        }
        out
    }

    /// `<self|other>` for column vectors.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.cols, 1, "inner product expects column vectors");
        assert_eq!(other.cols, 1, "inner product expects column vectors");
        assert_eq!(self.rows, other.rows, "inner product length mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Entry-wise comparison with absolute tolerance on the modulus.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.rows, self.cols) == (other.rows, other.cols)
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Largest `|A - A^dagger|` entry.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "hermiticity check on non-square matrix");
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                dev = dev.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        dev
    }

    /// Eigenvalues of a Hermitian matrix via cyclic Jacobi rotations,
    /// ascending. The caller is responsible for `self` being Hermitian.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        assert_eq!(self.rows, self.cols, "eigenvalues of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        // Symmetrize to wash out representation noise before rotating.
        for r in 0..n {
            for c in 0..n {
                let v = (a.get(r, c) + a.get(c, r).conj()) * Complex64::new(0.5, 0.0);
                a.set(r, c, v);
            }
        }
        for _sweep in 0..100 {
            let mut off: f64 = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a.get(p, q).norm());
                }
            }
            if off < 1e-15 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    let r = apq.norm();
                    if r < 1e-18 {
                        continue;
                    }
                    let phase = apq / r;
                    let app = a.get(p, p).re;
                    let aqq = a.get(q, q).re;
                    let theta = 0.5 * (2.0 * r).atan2(app - aqq);
                    let (s, c) = theta.sin_cos();
                    let cs = Complex64::new(c, 0.0);
                    let sc = phase.conj() * s;
                    let sp = phase * s;
                    // Columns: A <- A R with R[p][p]=c, R[p][q]=-s*phase,
                    // R[q][p]=s*conj(phase), R[q][q]=c.
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, akp * cs + akq * sc);
                        a.set(k, q, -akp * sp + akq * cs);
                    }
                    // Rows: A <- R^dagger A.
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, apk * cs + aqk * sp);
                        a.set(q, k, -apk * sc + aqk * cs);
                    }
                }
            }
        }
        let mut eigs: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eigs
    }
}

/// Tensor (Kronecker) product; output dimensions multiply.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let av = a.get(ar, ac);
            if av.norm_sqr() == 0.0 {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out.set(ar * b.rows() + br, ac * b.cols() + bc, av * b.get(br, bc));
                }
            }
        }
    }
    out
}

/// Kronecker product of several factors, left to right.
pub fn kron_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    assert!(!factors.is_empty(), "kron_all needs at least one factor");
    let mut acc = factors[0].clone();
    for f in &factors[1..] {
        acc = kron(&acc, f);
    }
    acc
}

/// Reorders the qubits of an operator on `n` qubits: qubit `i` of the input
/// moves to position `perm[i]` of the output. Qubit 0 is the most significant
/// bit of the basis index. Conjugation by the corresponding permutation
/// unitary, applied by index shuffling.
pub fn permute_qubits(m: &ComplexMatrix, perm: &[usize]) -> Result<ComplexMatrix, QdistError> {
    if m.rows() != m.cols() {
        return Err(QdistError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    let dim = m.rows();
    let n = perm.len();
    if dim != (1usize << n) || !dim.is_power_of_two() {
        return Err(QdistError::BadQubitDimension { dim, qubits: n });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(QdistError::InvalidPermutation { perm: perm.to_vec() });
        }
        seen[p] = true;
    }
    // index_map[i] = basis index with bit j of i moved to position perm[j].
    let mut index_map = vec![0usize; dim];
    for (i, slot) in index_map.iter_mut().enumerate() {
        let mut out = 0usize;
        for (j, &pj) in perm.iter().enumerate() {
            let bit = (i >> (n - 1 - j)) & 1;
            out |= bit << (n - 1 - pj);
        }
        *slot = out;
    }
    let mut out = ComplexMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            out.set(index_map[r], index_map[c], m.get(r, c));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_identity_with_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert!(kron(&i2, &i2).approx_eq(&ComplexMatrix::identity(4), DEFAULT_MATRIX_TOL));
    }

    #[test]
    fn kron_basis_projectors() {
        let p0 = ComplexMatrix::ket(&[c(1.0, 0.0), c(0.0, 0.0)]).outer();
        let p1 = ComplexMatrix::ket(&[c(0.0, 0.0), c(1.0, 0.0)]).outer();
        let p01 = kron(&p0, &p1);
        // Projector onto |01>, i.e. basis index 1 of a two-qubit space.
        let expected = ComplexMatrix::ket(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])
            .outer();
        assert!(p01.approx_eq(&expected, DEFAULT_MATRIX_TOL));
    }

    #[test]
    fn kron_dimensions_multiply() {
        let a = ComplexMatrix::zeros(4, 4);
        let b = ComplexMatrix::zeros(4, 4);
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (16, 16));
    }

    #[test]
    fn permute_identity_is_noop() {
        let mut m = ComplexMatrix::zeros(4, 4);
        m.set(1, 2, c(0.5, -0.25));
        m.set(3, 3, c(1.0, 0.0));
        let p = permute_qubits(&m, &[0, 1]).unwrap();
        assert!(p.approx_eq(&m, 0.0));
    }

    #[test]
    fn permute_swaps_basis_projector() {
        // |01><01| under a swap of the two qubits becomes |10><10|.
        let ket01 = ComplexMatrix::ket(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let ket10 = ComplexMatrix::ket(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let swapped = permute_qubits(&ket01.outer(), &[1, 0]).unwrap();
        assert!(swapped.approx_eq(&ket10.outer(), DEFAULT_MATRIX_TOL));
    }

    #[test]
    fn permute_then_inverse_restores() {
        let mut m = ComplexMatrix::zeros(8, 8);
        for r in 0..8 {
            for cc in 0..8 {
                m.set(r, cc, c((r * 8 + cc) as f64, (r as f64) - (cc as f64)));
            }
        }
        let perm = [2usize, 0, 1];
        let mut inverse = [0usize; 3];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let round = permute_qubits(&permute_qubits(&m, &perm).unwrap(), &inverse).unwrap();
        assert!(round.approx_eq(&m, 0.0));
    }

    #[test]
    fn permute_rejects_non_power_of_two() {
        let m = ComplexMatrix::zeros(3, 3);
        assert!(matches!(
            permute_qubits(&m, &[0, 1]),
            Err(QdistError::BadQubitDimension { .. })
        ));
    }

    #[test]
    fn permute_rejects_duplicate_targets() {
        let m = ComplexMatrix::zeros(4, 4);
        assert!(matches!(
            permute_qubits(&m, &[0, 0]),
            Err(QdistError::InvalidPermutation { .. })
        ));
    }

    #[test]
    fn jacobi_eigenvalues_of_diagonal() {
        let mut m = ComplexMatrix::zeros(3, 3);
        m.set(0, 0, c(2.0, 0.0));
        m.set(1, 1, c(-1.0, 0.0));
        m.set(2, 2, c(0.5, 0.0));
        let eigs = m.hermitian_eigenvalues();
        assert!((eigs[0] - -1.0).abs() < 1e-12);
        assert!((eigs[1] - 0.5).abs() < 1e-12);
        assert!((eigs[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_eigenvalues_of_pauli_y() {
        let mut y = ComplexMatrix::zeros(2, 2);
        y.set(0, 1, c(0.0, -1.0));
        y.set(1, 0, c(0.0, 1.0));
        let eigs = y.hermitian_eigenvalues();
        assert!((eigs[0] - -1.0).abs() < 1e-12);
        assert!((eigs[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_preserves_trace() {
        // Fixed pseudo-random Hermitian matrix.
        let mut m = ComplexMatrix::zeros(4, 4);
        let mut state = 1u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (u32::MAX as f64) - 0.5
        };
        for r in 0..4 {
            for cc in r..4 {
                let v = c(next(), if r == cc { 0.0 } else { next() });
                m.set(r, cc, v);
                m.set(cc, r, v.conj());
            }
        }
        let tr = m.trace().re;
        let sum: f64 = m.hermitian_eigenvalues().iter().sum();
        assert!((tr - sum).abs() < 1e-10);
    }
}
