//! Ideal-state factories (GHZ, W, Bell), noise channels, and comparison
//! primitives.
//!
//! Basis convention: qubit 0 is the most significant bit. The GHZ factory
//! produces the cluster-form state with amplitudes +1/2 on |000>, -1/2 on
//! |110>, +1/2 on |011> and |101>; the W factory produces the
//! Hamming-weight-one state (|001> + |010> + |100>)/sqrt(3), whose equal-angle
//! Wigner slice is independent of the azimuthal angle.

use num_complex::Complex64;

use crate::linalg::{self, ComplexMatrix, QubitPartition};
use crate::{Error, Result};

const NORM_TOL: f64 = 1e-9;

/// Normalized pure state vector over `2^n` basis kets.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::DimensionMismatch(format!(
                "expected {} amplitudes for {n_qubits} qubits, got {}",
                1usize << n_qubits,
                amplitudes.len()
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let deviation = (norm - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

/// Hermitian, PSD, unit-trace operator on `2^n` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity (1e-10), unit trace (1e-10), and positivity
    /// (min eigenvalue >= -1e-10).
    pub fn from_matrix(n_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {dim}x{dim} matrix for {n_qubits} qubits, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let asymmetry = matrix.hermitian_asymmetry();
        if asymmetry > linalg::HERMITICITY_TOL {
            return Err(Error::NotHermitian { asymmetry });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "trace must be 1, got {trace}"
            )));
        }
        let (values, _) = linalg::hermitian_eigen(&matrix)?;
        if let Some(&min) = values.last() {
            if min < linalg::PSD_EIGENVALUE_FLOOR {
                return Err(Error::NotPositiveSemidefinite {
                    min_eigenvalue: min,
                });
            }
        }
        Ok(Self { n_qubits, matrix })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }
}

/// Noise channel menu emulating the experimental imperfections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    GlobalDepolarizing,
    PerQubitDephasing,
    PopulationImbalance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub strength: f64,
    pub target_qubit: Option<usize>,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, strength: f64, target_qubit: Option<usize>) -> Result<Self> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(Error::InvalidArgument(format!(
                "noise strength must be in [0, 1], got {strength}"
            )));
        }
        Ok(Self {
            kind,
            strength,
            target_qubit,
        })
    }
}

/// Cluster-form GHZ state: (|000> - |110> + |011> + |101>)/2.
pub fn make_ghz() -> PureState {
    let mut amp = vec![Complex64::ZERO; 8];
    amp[0b000] = Complex64::new(0.5, 0.0);
    amp[0b110] = Complex64::new(-0.5, 0.0);
    amp[0b011] = Complex64::new(0.5, 0.0);
    amp[0b101] = Complex64::new(0.5, 0.0);
    PureState {
        n_qubits: 3,
        amplitudes: amp,
    }
}

/// Weight-one W state: (|001> + |010> + |100>)/sqrt(3).
pub fn make_w() -> PureState {
    let a = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
    let mut amp = vec![Complex64::ZERO; 8];
    amp[0b001] = a;
    amp[0b010] = a;
    amp[0b100] = a;
    PureState {
        n_qubits: 3,
        amplitudes: amp,
    }
}

/// Bell pair (|00> + |11>)/sqrt(2).
pub fn make_bell() -> PureState {
    let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amp = vec![Complex64::ZERO; 4];
    amp[0b00] = a;
    amp[0b11] = a;
    PureState {
        n_qubits: 2,
        amplitudes: amp,
    }
}

/// I / 2^n.
pub fn maximally_mixed(n_qubits: usize) -> DensityOperator {
    let dim = 1usize << n_qubits;
    let matrix = ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0));
    DensityOperator { n_qubits, matrix }
}

/// |psi><psi|; rejects inputs whose norm deviates from 1 by more than 1e-9.
pub fn projector(psi: &PureState) -> Result<DensityOperator> {
    let norm = psi
        .amplitudes
        .iter()
        .map(|a| a.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let deviation = (norm - 1.0).abs();
    if deviation > NORM_TOL {
        return Err(Error::NotNormalized { deviation });
    }
    let dim = psi.amplitudes.len();
    let mut matrix = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            matrix[(i, j)] = psi.amplitudes[i] * psi.amplitudes[j].conj();
        }
    }
    Ok(DensityOperator {
        n_qubits: psi.n_qubits,
        matrix,
    })
}

/// Embeds a 2x2 operator on `qubit` into the full register.
pub fn embed_single_qubit(op: &ComplexMatrix, qubit: usize, n_qubits: usize) -> ComplexMatrix {
    let mut full = ComplexMatrix::identity(1);
    for q in 0..n_qubits {
        if q == qubit {
            full = linalg::tensor_product(&full, op);
        } else {
            full = linalg::tensor_product(&full, &ComplexMatrix::identity(2));
        }
    }
    full
}

fn pauli_z_on(qubit: usize, n_qubits: usize) -> ComplexMatrix {
    embed_single_qubit(&ComplexMatrix::diag(&[1.0, -1.0]), qubit, n_qubits)
}

/// Applies one noise channel; trace and positivity are preserved for all
/// strengths in [0, 1].
pub fn apply_noise(rho: &DensityOperator, spec: &NoiseSpec) -> Result<DensityOperator> {
    let n = rho.n_qubits();
    let p = spec.strength;
    let target = |spec: &NoiseSpec| -> Result<usize> {
        let q = spec.target_qubit.ok_or_else(|| {
            Error::InvalidArgument("per-qubit noise requires a target qubit".into())
        })?;
        if q >= n {
            return Err(Error::InvalidQubitIndex {
                index: q,
                n_qubits: n,
            });
        }
        Ok(q)
    };

    let matrix = match spec.kind {
        NoiseKind::GlobalDepolarizing => {
            let dim = rho.dim() as f64;
            let mixed = ComplexMatrix::identity(rho.dim()).scale(Complex64::new(p / dim, 0.0));
            rho.matrix().scale(Complex64::new(1.0 - p, 0.0)).add(&mixed)
        }
        NoiseKind::PerQubitDephasing => {
            let z = pauli_z_on(target(spec)?, n);
            let flipped = z.matmul(rho.matrix()).matmul(&z);
            rho.matrix()
                .scale(Complex64::new(1.0 - p, 0.0))
                .add(&flipped.scale(Complex64::new(p, 0.0)))
        }
        NoiseKind::PopulationImbalance => {
            let k = embed_single_qubit(
                &ComplexMatrix::diag(&[1.0, (1.0 - p).sqrt()]),
                target(spec)?,
                n,
            );
            let damped = k.matmul(rho.matrix()).matmul(&k.adjoint());
            let t = damped.trace().re;
            if t <= 0.0 {
                return Err(Error::InvalidArgument(
                    "population-imbalance channel annihilated the state".into(),
                ));
            }
            damped.scale(Complex64::new(1.0 / t, 0.0))
        }
    };
    // Symmetrize away rounding before revalidating.
    let matrix = matrix
        .add(&matrix.adjoint())
        .scale(Complex64::new(0.5, 0.0));
    DensityOperator::from_matrix(n, matrix)
}

/// F = <psi| rho |psi>.
pub fn fidelity(psi: &PureState, rho: &DensityOperator) -> Result<f64> {
    if psi.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} qubits, operator has {}",
            psi.n_qubits(),
            rho.n_qubits()
        )));
    }
    let v = rho.matrix().matvec(psi.amplitudes());
    let f: Complex64 = psi
        .amplitudes()
        .iter()
        .zip(&v)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(f.re)
}

/// Tr[rho^2].
pub fn purity(rho: &DensityOperator) -> f64 {
    let m = rho.matrix();
    let mut acc = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            // Tr[rho^2] = sum_ij rho_ij rho_ji with rho_ji = conj(rho_ij).
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc
}

/// Reduced state on the kept qubits.
pub fn reduce(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    let part = QubitPartition::new(rho.n_qubits(), keep.to_vec())?;
    let m = linalg::partial_trace(rho.matrix(), &part)?;
    DensityOperator::from_matrix(keep.len(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::tensor_product;

    #[test]
    fn ghz_amplitudes_and_norm() {
        let ghz = make_ghz();
        assert_eq!(ghz.amplitudes()[0b000], Complex64::new(0.5, 0.0));
        assert_eq!(ghz.amplitudes()[0b110], Complex64::new(-0.5, 0.0));
        assert_eq!(ghz.amplitudes()[0b011], Complex64::new(0.5, 0.0));
        assert_eq!(ghz.amplitudes()[0b101], Complex64::new(0.5, 0.0));
        let norm: f64 = ghz.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ghz_zzz_expectation_matches_brute_force() {
        // Oracle: build Z (x) Z (x) Z as an 8x8 matrix and take <psi|M|psi>.
        let z = ComplexMatrix::diag(&[1.0, -1.0]);
        let zzz = tensor_product(&tensor_product(&z, &z), &z);
        let ghz = make_ghz();
        let v = zzz.matvec(ghz.amplitudes());
        let expect: Complex64 = ghz
            .amplitudes()
            .iter()
            .zip(&v)
            .map(|(a, b)| a.conj() * b)
            .sum();
        // All four populated kets have even Hamming weight, so <ZZZ> = 1.
        assert!((expect.re - 1.0).abs() < 1e-14 && expect.im.abs() < 1e-15);
    }

    #[test]
    fn w_amplitudes_and_norm() {
        let w = make_w();
        let a = 1.0 / 3f64.sqrt();
        assert!((w.amplitudes()[0b001].re - a).abs() < 1e-15);
        assert!((w.amplitudes()[0b010].re - a).abs() < 1e-15);
        assert!((w.amplitudes()[0b100].re - a).abs() < 1e-15);
        let norm: f64 = w.amplitudes().iter().map(|x| x.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ghz_w_overlap_by_term_inner_product() {
        // Term-by-term inner product oracle. The weight-one W shares no basis
        // ket with the cluster GHZ, so the overlap vanishes.
        let ghz = make_ghz();
        let w = make_w();
        let overlap: Complex64 = ghz
            .amplitudes()
            .iter()
            .zip(w.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!(overlap.norm() < 1e-15);
    }

    #[test]
    fn projector_of_zero_ket() {
        let zero = PureState::new(1, vec![Complex64::ONE, Complex64::ZERO]).unwrap();
        let rho = projector(&zero).unwrap();
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::diag(&[1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn projector_of_ghz_is_rank_one_unit_trace() {
        let rho = projector(&make_ghz()).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-14);
        assert!((purity(&rho) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn projector_of_plus_state_outer_product() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = PureState::new(1, vec![Complex64::new(s, 0.0); 2]).unwrap();
        let rho = projector(&plus).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((rho.matrix()[(i, j)] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn projector_rejects_unnormalized() {
        let bad = PureState {
            n_qubits: 1,
            amplitudes: vec![Complex64::ONE, Complex64::ONE],
        };
        assert!(matches!(projector(&bad), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn depolarizing_full_strength_gives_mixed() {
        let rho = projector(&make_ghz()).unwrap();
        let spec = NoiseSpec::new(NoiseKind::GlobalDepolarizing, 1.0, None).unwrap();
        let out = apply_noise(&rho, &spec).unwrap();
        assert!(out.matrix().max_abs_diff(maximally_mixed(3).matrix()) < 1e-14);
    }

    #[test]
    fn dephasing_scales_coherence() {
        // Channel-matrix oracle: the |00><11| coherence scales by (1 - 2p).
        let bell = projector(&make_bell()).unwrap();
        for p in [0.1, 0.25, 0.5] {
            let spec = NoiseSpec::new(NoiseKind::PerQubitDephasing, p, Some(0)).unwrap();
            let out = apply_noise(&bell, &spec).unwrap();
            let expect = 0.5 * (1.0 - 2.0 * p);
            assert!((out.matrix()[(0, 3)].re - expect).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn zero_strength_noise_is_identity() {
        let rho = projector(&make_w()).unwrap();
        for kind in [
            NoiseKind::GlobalDepolarizing,
            NoiseKind::PerQubitDephasing,
            NoiseKind::PopulationImbalance,
        ] {
            let spec = NoiseSpec::new(kind, 0.0, Some(1)).unwrap();
            let out = apply_noise(&rho, &spec).unwrap();
            assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-12);
        }
    }

    #[test]
    fn noise_requires_target_for_per_qubit_kinds() {
        let rho = projector(&make_w()).unwrap();
        let spec = NoiseSpec::new(NoiseKind::PerQubitDephasing, 0.3, None).unwrap();
        assert!(apply_noise(&rho, &spec).is_err());
    }

    #[test]
    fn fidelity_cases() {
        let ghz = make_ghz();
        let rho = projector(&ghz).unwrap();
        assert!((fidelity(&ghz, &rho).unwrap() - 1.0).abs() < 1e-14);
        // Disjoint ket supports: see ghz_w_overlap_by_term_inner_product.
        let w_rho = projector(&make_w()).unwrap();
        assert!(fidelity(&ghz, &w_rho).unwrap().abs() < 1e-14);
        assert!((fidelity(&ghz, &maximally_mixed(3)).unwrap() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let bell = make_bell();
        assert!(fidelity(&bell, &maximally_mixed(3)).is_err());
    }

    #[test]
    fn purity_cases() {
        assert!((purity(&projector(&make_ghz()).unwrap()) - 1.0).abs() < 1e-14);
        assert!((purity(&maximally_mixed(3)) - 0.125).abs() < 1e-14);
        // Closed form (1-p)^2 + 2(1-p)p/8 + p^2/8 at p = 0.2 gives 0.685.
        let spec = NoiseSpec::new(NoiseKind::GlobalDepolarizing, 0.2, None).unwrap();
        let noisy = apply_noise(&projector(&make_ghz()).unwrap(), &spec).unwrap();
        assert!((purity(&noisy) - 0.685).abs() < 1e-12);
    }
}
