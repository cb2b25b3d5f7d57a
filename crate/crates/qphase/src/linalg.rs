//! Dense complex matrix algebra for dimensions up to 2^5.
//!
//! Everything downstream (states, Wigner kernels, tomography) runs through
//! this module. Matrices are row-major `Complex64` buffers; qubit index 0 is
//! the leftmost tensor factor and the most significant bit of basis labels.

use num_complex::Complex64;

use crate::{Error, Result};

/// Tolerance below which a matrix counts as Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Eigenvalues above this (negative) floor are clamped to zero in PSD checks.
pub const PSD_EIGENVALUE_FLOOR: f64 = -1e-10;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            entries: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Builds from a row-major entry buffer; `entries.len()` must be `rows * cols`.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry count must match dimensions"
        );
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            entries.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            entries,
        }
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
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

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn conjugate(&self) -> Self {
        let entries = self.entries.iter().map(|z| z.conj()).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let entries = self.entries.iter().map(|z| z * factor).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max absolute deviation from Hermiticity, `max |m[i][j] - conj(m[j][i])|`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    fn check_hermitian(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let asymmetry = self.hermitian_asymmetry();
        if asymmetry > HERMITICITY_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Subset of qubit indices within an `n`-qubit register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitPartition {
    n_qubits: usize,
    subset: Vec<usize>,
}

impl QubitPartition {
    /// Indices must be strictly increasing and each `< n_qubits`.
    pub fn new(n_qubits: usize, subset: Vec<usize>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("n_qubits must be positive".into()));
        }
        for (k, &q) in subset.iter().enumerate() {
            if q >= n_qubits {
                return Err(Error::InvalidQubitIndex { index: q, n_qubits });
            }
            if k > 0 && subset[k - 1] >= q {
                return Err(Error::InvalidArgument(
                    "qubit indices must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { n_qubits, subset })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.n_qubits)
            .filter(|q| !self.subset.contains(q))
            .collect()
    }
}

/// Bit of qubit `q` in basis index `i` (qubit 0 is the most significant bit).
#[inline]
pub fn qubit_bit(index: usize, qubit: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - 1 - qubit)) & 1
}

fn check_qubit_dim(m: &ComplexMatrix, n_qubits: usize) -> Result<()> {
    let dim = 1usize << n_qubits;
    if m.rows() != dim || m.cols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "expected {dim}x{dim} matrix for {n_qubits} qubits, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// Kronecker product with big-endian qubit ordering (left factor is most
/// significant).
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows() * b.rows(), a.cols() * b.cols());
    for ia in 0..a.rows() {
        for ja in 0..a.cols() {
            let f = a[(ia, ja)];
            if f == Complex64::ZERO {
                continue;
            }
            for ib in 0..b.rows() {
                for jb in 0..b.cols() {
                    out[(ia * b.rows() + ib, ja * b.cols() + jb)] = f * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// Traces out every qubit not in `keep`; trace is preserved.
pub fn partial_trace(rho: &ComplexMatrix, keep: &QubitPartition) -> Result<ComplexMatrix> {
    let n = keep.n_qubits();
    check_qubit_dim(rho, n)?;
    let kept = keep.subset();
    let traced = keep.complement();
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();

    // Scatter sub-index bits (MSB-first over `positions`) into a full index.
    let scatter = |sub: usize, positions: &[usize]| -> usize {
        let mut full = 0usize;
        for (k, &q) in positions.iter().enumerate() {
            let bit = (sub >> (positions.len() - 1 - k)) & 1;
            full |= bit << (n - 1 - q);
        }
        full
    };

    let mut out = ComplexMatrix::zeros(dk, dk);
    for r in 0..dk {
        for c in 0..dk {
            let mut acc = Complex64::ZERO;
            for t in 0..dt {
                let row = scatter(r, kept) | scatter(t, &traced);
                let col = scatter(c, kept) | scatter(t, &traced);
                acc += rho[(row, col)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Transposes the indices of the qubits in `subset`; Hermiticity is preserved.
pub fn partial_transpose(rho: &ComplexMatrix, subset: &QubitPartition) -> Result<ComplexMatrix> {
    let n = subset.n_qubits();
    check_qubit_dim(rho, n)?;
    let dim = 1usize << n;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut ii = i;
            let mut jj = j;
            for &q in subset.subset() {
                let shift = n - 1 - q;
                let bi = (i >> shift) & 1;
                let bj = (j >> shift) & 1;
                ii = (ii & !(1 << shift)) | (bj << shift);
                jj = (jj & !(1 << shift)) | (bi << shift);
            }
            out[(ii, jj)] = rho[(i, j)];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Returns eigenvalues in descending order and the matching eigenvector
/// columns, with `m = V diag(λ) V†`.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    m.check_hermitian()?;
    let dim = m.rows();
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(dim);

    let scale = a.max_abs().max(1.0);
    let stop = 1e-15 * scale;
    const MAX_SWEEPS: usize = 100;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= stop * 1e-2 {
                    continue;
                }
                // Phase that makes the pivot real, then a real Jacobi angle.
                let phase = apq / r; // e^{i alpha}
                let d = a[(p, p)].re - a[(q, q)].re;
                let theta = 0.5 * (2.0 * r).atan2(d);
                let (s, c) = theta.sin_cos();
                // Rotation U: U[p][p]=c, U[p][q]=-s, U[q][p]=s e^{-ia}, U[q][q]=c e^{-ia}.
                let e_neg = phase.conj();
                // Columns: A <- A U
                for i in 0..dim {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip + s * e_neg * aiq;
                    a[(i, q)] = -s * aip + c * e_neg * aiq;
                }
                // Rows: A <- U† A
                for j in 0..dim {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj + s * phase * aqj;
                    a[(q, j)] = -s * apj + c * phase * aqj;
                }
                // Accumulate eigenvectors: V <- V U
                for i in 0..dim {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip + s * e_neg * viq;
                    v[(i, q)] = -s * vip + c * e_neg * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..dim).collect();
    let values: Vec<f64> = (0..dim).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());

    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut vectors = ComplexMatrix::zeros(dim, dim);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..dim {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok((sorted_values, vectors))
}

/// Hermitian PSD square root; eigenvalues in `[-1e-10, 0)` are clamped to 0.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(m)?;
    if let Some(&min) = values.last() {
        if min < PSD_EIGENVALUE_FLOOR {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
    }
    let roots: Vec<f64> = values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let mut acc = Complex64::ZERO;
            for (k, &r) in roots.iter().enumerate() {
                acc += vectors[(i, k)] * r * vectors[(j, k)].conj();
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    let (values, _) = hermitian_eigen(m)?;
    Ok(values.iter().map(|l| l.abs()).sum())
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]])
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::diag(&[1.0, -1.0])
    }

    #[test]
    fn tensor_product_identity_case() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor_product(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn tensor_product_diagonal_case() {
        let got = tensor_product(&pauli_z(), &ComplexMatrix::identity(2));
        assert_eq!(got, ComplexMatrix::diag(&[1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn tensor_product_xx_flips_00_to_11() {
        // Oracle: direct 4x4 multiplication of sigma_x (x) sigma_x against |00>.
        let xx = tensor_product(&pauli_x(), &pauli_x());
        let v = xx.matvec(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(v, vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    }

    fn bell_rho() -> ComplexMatrix {
        // (|00> + |11>)/sqrt(2) projector
        let mut m = ComplexMatrix::zeros(4, 4);
        for &i in &[0usize, 3] {
            for &j in &[0usize, 3] {
                m[(i, j)] = c(0.5, 0.0);
            }
        }
        m
    }

    #[test]
    fn partial_trace_bell_gives_maximally_mixed() {
        // Oracle: 4x4 index-sum, computed by hand: diag(1/2, 1/2).
        let keep = QubitPartition::new(2, vec![0]).unwrap();
        let got = partial_trace(&bell_rho(), &keep).unwrap();
        let expect = ComplexMatrix::diag(&[0.5, 0.5]);
        assert!(got.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn partial_trace_product_state() {
        let psi = ComplexMatrix::from_rows(&[&[c(0.6, 0.0)], &[c(0.8, 0.0)]]);
        let rho_a = psi.matmul(&psi.adjoint());
        let chi = ComplexMatrix::from_rows(&[&[c(0.0, 0.6)], &[c(0.8, 0.0)]]);
        let rho_b = chi.matmul(&chi.adjoint());
        let rho = tensor_product(&rho_a, &rho_b);
        let keep = QubitPartition::new(2, vec![0]).unwrap();
        let got = partial_trace(&rho, &keep).unwrap();
        assert!(got.max_abs_diff(&rho_a) < 1e-14);
    }

    #[test]
    fn partial_trace_maximally_mixed() {
        let rho = ComplexMatrix::identity(8).scale(c(1.0 / 8.0, 0.0));
        let keep = QubitPartition::new(3, vec![0, 1]).unwrap();
        let got = partial_trace(&rho, &keep).unwrap();
        let expect = ComplexMatrix::identity(4).scale(c(0.25, 0.0));
        assert!(got.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dimension() {
        let keep = QubitPartition::new(3, vec![0]).unwrap();
        assert!(matches!(
            partial_trace(&ComplexMatrix::identity(4), &keep),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn partial_transpose_factorized_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = test_support::random_density_matrix(&mut rng, 1);
        let b = test_support::random_density_matrix(&mut rng, 1);
        let rho = tensor_product(&a, &b);
        let sub = QubitPartition::new(2, vec![1]).unwrap();
        let got = partial_transpose(&rho, &sub).unwrap();
        let expect = tensor_product(&a, &b.transpose());
        assert!(got.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn partial_transpose_bell_eigenvalues() {
        // Oracle: explicit 4x4 eigendecomposition gives {1/2, 1/2, 1/2, -1/2}.
        let sub = QubitPartition::new(2, vec![1]).unwrap();
        let pt = partial_transpose(&bell_rho(), &sub).unwrap();
        let (vals, _) = hermitian_eigen(&pt).unwrap();
        let expect = [0.5, 0.5, 0.5, -0.5];
        for (got, want) in vals.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{vals:?}");
        }
    }

    #[test]
    fn partial_transpose_empty_subset_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rho = test_support::random_density_matrix(&mut rng, 2);
        let sub = QubitPartition::new(2, vec![]).unwrap();
        let got = partial_transpose(&rho, &sub).unwrap();
        assert_eq!(got, rho);
    }

    #[test]
    fn eigen_sigma_z() {
        let (vals, _) = hermitian_eigen(&pauli_z()).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_sigma_x() {
        let (vals, vecs) = hermitian_eigen(&pauli_x()).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] + 1.0).abs() < 1e-14);
        // Eigenvectors are (|0> +- |1>)/sqrt(2) up to phase.
        for col in 0..2 {
            let ratio = vecs[(0, col)].norm() / vecs[(1, col)].norm();
            assert!((ratio - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn eigen_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = test_support::random_hermitian(&mut rng, 8);
        let (vals, vecs) = hermitian_eigen(&h).unwrap();
        let rebuilt = vecs
            .matmul(&ComplexMatrix::diag(&vals))
            .matmul(&vecs.adjoint());
        assert!(rebuilt.max_abs_diff(&h) < 1e-9);
        let gram = vecs.adjoint().matmul(&vecs);
        assert!(gram.max_abs_diff(&ComplexMatrix::identity(8)) < 1e-9);
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let m =
            ComplexMatrix::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(0.0, 0.0), c(0.0, 0.0)]]);
        assert!(matches!(
            hermitian_eigen(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn psd_sqrt_identity_and_diag() {
        let i4 = ComplexMatrix::identity(4);
        assert!(psd_sqrt(&i4).unwrap().max_abs_diff(&i4) < 1e-12);
        let got = psd_sqrt(&ComplexMatrix::diag(&[4.0, 9.0])).unwrap();
        assert!(got.max_abs_diff(&ComplexMatrix::diag(&[2.0, 3.0])) < 1e-12);
    }

    #[test]
    fn psd_sqrt_projector_is_idempotent() {
        // Oracle: P^2 = P for a rank-1 projector, so sqrt(P) = P.
        let p = bell_rho();
        assert!(p.matmul(&p).max_abs_diff(&p) < 1e-14);
        assert!(psd_sqrt(&p).unwrap().max_abs_diff(&p) < 1e-10);
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        assert!(matches!(
            psd_sqrt(&pauli_z()),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn trace_norm_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = test_support::random_density_matrix(&mut rng, 2);
        assert!((trace_norm(&rho).unwrap() - 1.0).abs() < 1e-10);
        let sub = QubitPartition::new(2, vec![1]).unwrap();
        let pt = partial_transpose(&bell_rho(), &sub).unwrap();
        assert!((trace_norm(&pt).unwrap() - 2.0).abs() < 1e-10);
        assert!(trace_norm(&ComplexMatrix::zeros(3, 3)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn qubit_partition_validation() {
        assert!(QubitPartition::new(3, vec![0, 2]).is_ok());
        assert!(QubitPartition::new(3, vec![2, 0]).is_err());
        assert!(QubitPartition::new(3, vec![0, 0]).is_err());
        assert!(QubitPartition::new(3, vec![3]).is_err());
    }
}
