//! Entanglement and state-quality figures of merit: linear entropy,
//! logarithmic negativity, Wootters concurrence, two- and three-tangles, and
//! the combined fingerprint report pairing them with the Wigner-based
//! indicators.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, QubitPartition};
use crate::states::{self, DensityOperator, PureState};
use crate::wigner::{self, QuadratureGrid, VolumeMethod};
use crate::{Error, Result};

/// Log-negativities of a three-qubit state for the three one-vs-two
/// bipartitions (qubits labeled 1..3), plus their mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNegativityReport {
    #[serde(rename = "1|23")]
    pub q1_vs_23: f64,
    #[serde(rename = "2|13")]
    pub q2_vs_13: f64,
    #[serde(rename = "3|12")]
    pub q3_vs_12: f64,
    pub mean: f64,
}

/// Fingerprint of a state: Wigner-based and density-matrix-based indicators
/// side by side. Tangle and negativity entries are `None` unless n = 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantifierReport {
    pub negative_volume: f64,
    pub integrated_ea: f64,
    pub linear_entropy: f64,
    pub log_negativity: Option<LogNegativityReport>,
    pub tau2: Option<f64>,
    pub tau3_paper: Option<f64>,
    pub tau3_ckw: Option<f64>,
    pub fidelity_vs_target: Option<f64>,
    pub purity: f64,
}

/// Knobs for the Wigner-based entries of [`fingerprint`].
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintConfig {
    pub volume_method: VolumeMethod,
    pub grid: QuadratureGrid,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        Self {
            volume_method: VolumeMethod::MonteCarlo {
                samples: 1_000_000,
                seed: 0,
            },
            grid: QuadratureGrid::default_grid(),
        }
    }
}

/// `S_lin = (1 - Tr[rho^2]) / (1 - 2^{-n})`, in [0, 1].
pub fn linear_entropy(rho: &DensityOperator) -> f64 {
    let n = rho.n_qubits();
    let p = states::purity(rho);
    ((1.0 - p) / (1.0 - 0.5f64.powi(n as i32))).clamp(0.0, 1.0)
}

/// `N = log2 ||rho^{T_subset}||_1`, clipped at 0 against rounding on PPT
/// states.
pub fn log_negativity(rho: &DensityOperator, bipartition: &QubitPartition) -> Result<f64> {
    if bipartition.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "bipartition is over {} qubits, state has {}",
            bipartition.n_qubits(),
            rho.n_qubits()
        )));
    }
    if bipartition.subset().is_empty() || bipartition.subset().len() == rho.n_qubits() {
        return Err(Error::InvalidArgument(
            "bipartition must be nonempty and proper".into(),
        ));
    }
    let pt = linalg::partial_transpose(rho.matrix(), bipartition)?;
    let tn = linalg::trace_norm(&pt)?;
    Ok(tn.log2().max(0.0))
}

/// Spin-flipped eigenvalues `lambda_k` (descending) of a two-qubit state:
/// the eigenvalues of `R = sqrt(sqrt(rho) rho_tilde sqrt(rho))` with
/// `rho_tilde = (sigma_y (x) sigma_y) rho* (sigma_y (x) sigma_y)`.
fn spin_flip_lambdas(rho: &DensityOperator) -> Result<[f64; 4]> {
    let sy = wigner::pauli_matrix(2);
    let yy = linalg::tensor_product(&sy, &sy);
    let tilde = yy.matmul(&rho.matrix().conjugate()).matmul(&yy);
    let s = linalg::psd_sqrt(rho.matrix())?;
    let m = s.matmul(&tilde).matmul(&s);
    // m is Hermitian PSD up to rounding; symmetrize before the eigensolve.
    let m = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    let (vals, _) = linalg::hermitian_eigen(&m)?;
    let mut l = [0.0f64; 4];
    for (dst, v) in l.iter_mut().zip(vals) {
        *dst = v.max(0.0).sqrt();
    }
    Ok(l)
}

/// Wootters concurrence `max(0, l1 - l2 - l3 - l4)` of a two-qubit state.
pub fn concurrence(rho: &DensityOperator) -> Result<f64> {
    if rho.n_qubits() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "concurrence is defined for 2 qubits, got {}",
            rho.n_qubits()
        )));
    }
    let l = spin_flip_lambdas(rho)?;
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

fn pair_tangle(rho: &DensityOperator, i: usize, j: usize) -> Result<f64> {
    let keep = if i < j { [i, j] } else { [j, i] };
    let pair = states::reduce(rho, &keep)?;
    Ok(concurrence(&pair)?.powi(2))
}

fn require_three_qubits(rho: &DensityOperator, what: &str) -> Result<()> {
    if rho.n_qubits() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "{what} is defined for 3 qubits, got {}",
            rho.n_qubits()
        )));
    }
    Ok(())
}

fn check_pivot(pivot: usize) -> Result<()> {
    if pivot >= 3 {
        return Err(Error::InvalidQubitIndex {
            index: pivot,
            n_qubits: 3,
        });
    }
    Ok(())
}

/// Mean squared pairwise concurrence,
/// `tau2 = (tau_12 + tau_23 + tau_13) / 3`.
pub fn tau2(rho: &DensityOperator) -> Result<f64> {
    require_three_qubits(rho, "tau2")?;
    let t = pair_tangle(rho, 0, 1)? + pair_tangle(rho, 1, 2)? + pair_tangle(rho, 0, 2)?;
    Ok(t / 3.0)
}

/// Three-tangle in the form `sqrt(7/4 S_lin^{(i)}) - (tau_ij + tau_ik)` with
/// the pivot's single-qubit linear entropy at n = 1 normalization. Reported
/// unclipped; can exceed 1 (ideal GHZ gives sqrt(7)/2).
pub fn tau3_paper(rho: &DensityOperator, pivot: usize) -> Result<f64> {
    require_three_qubits(rho, "tau3_paper")?;
    check_pivot(pivot)?;
    let single = states::reduce(rho, &[pivot])?;
    let s_lin = linear_entropy(&single);
    let others: Vec<usize> = (0..3).filter(|&q| q != pivot).collect();
    let pair_sum = pair_tangle(rho, pivot, others[0])? + pair_tangle(rho, pivot, others[1])?;
    Ok((7.0 / 4.0 * s_lin).sqrt() - pair_sum)
}

/// Residual tangle `max(0, 4 det rho_i - tau_ij - tau_ik)`; exact entanglement
/// monotone for pure states, kept as a cross-check.
pub fn tau3_ckw(rho: &DensityOperator, pivot: usize) -> Result<f64> {
    require_three_qubits(rho, "tau3_ckw")?;
    check_pivot(pivot)?;
    let single = states::reduce(rho, &[pivot])?;
    let m = single.matrix();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re;
    let others: Vec<usize> = (0..3).filter(|&q| q != pivot).collect();
    let pair_sum = pair_tangle(rho, pivot, others[0])? + pair_tangle(rho, pivot, others[1])?;
    Ok((4.0 * det - pair_sum).max(0.0))
}

fn pivot_average(
    rho: &DensityOperator,
    f: fn(&DensityOperator, usize) -> Result<f64>,
) -> Result<f64> {
    let mut acc = 0.0;
    for pivot in 0..3 {
        acc += f(rho, pivot)?;
    }
    Ok(acc / 3.0)
}

fn log_negativity_report(rho: &DensityOperator) -> Result<LogNegativityReport> {
    let mut vals = [0.0f64; 3];
    for (q, v) in vals.iter_mut().enumerate() {
        let part = QubitPartition::new(3, vec![q])?;
        *v = log_negativity(rho, &part)?;
    }
    Ok(LogNegativityReport {
        q1_vs_23: vals[0],
        q2_vs_13: vals[1],
        q3_vs_12: vals[2],
        mean: (vals[0] + vals[1] + vals[2]) / 3.0,
    })
}

/// Assembles the full radar-fingerprint report. Tangle and negativity fields
/// are populated only for three-qubit states.
pub fn fingerprint(
    rho: &DensityOperator,
    target: Option<&PureState>,
    config: &FingerprintConfig,
) -> Result<QuantifierReport> {
    let volume = wigner::negative_volume(rho, config.volume_method)?;
    let integrated_ea = wigner::integrated_ea_slice(rho, &config.grid)?;
    let (log_neg, t2, t3p, t3c) = if rho.n_qubits() == 3 {
        (
            Some(log_negativity_report(rho)?),
            Some(tau2(rho)?),
            Some(pivot_average(rho, tau3_paper)?),
            Some(pivot_average(rho, tau3_ckw)?),
        )
    } else {
        (None, None, None, None)
    };
    let fidelity_vs_target = match target {
        Some(psi) => Some(states::fidelity(psi, rho)?),
        None => None,
    };
    Ok(QuantifierReport {
        negative_volume: volume.value,
        integrated_ea,
        linear_entropy: linear_entropy(rho),
        log_negativity: log_neg,
        tau2: t2,
        tau3_paper: t3p,
        tau3_ckw: t3c,
        fidelity_vs_target,
        purity: states::purity(rho),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use crate::states::{make_bell, make_ghz, make_w, maximally_mixed, projector, reduce};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ghz_rho() -> DensityOperator {
        projector(&make_ghz()).unwrap()
    }

    fn w_rho() -> DensityOperator {
        projector(&make_w()).unwrap()
    }

    fn ket000() -> DensityOperator {
        let mut amps = vec![Complex64::ZERO; 8];
        amps[0] = Complex64::ONE;
        projector(&PureState::new(3, amps).unwrap()).unwrap()
    }

    #[test]
    fn linear_entropy_reference_cases() {
        assert!(linear_entropy(&ghz_rho()).abs() < 1e-12);
        assert!((linear_entropy(&maximally_mixed(3)) - 1.0).abs() < 1e-12);
        // Single-qubit reduction of a Bell pair: Tr[(I/2)^2] = 1/2.
        let bell = projector(&make_bell()).unwrap();
        let half = reduce(&bell, &[0]).unwrap();
        assert!((linear_entropy(&half) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_negativity_reference_cases() {
        let product = ket000();
        for q in 0..3 {
            let part = QubitPartition::new(3, vec![q]).unwrap();
            assert!(log_negativity(&product, &part).unwrap().abs() < 1e-9);
        }
        let bell = projector(&make_bell()).unwrap();
        let part = QubitPartition::new(2, vec![0]).unwrap();
        assert!((log_negativity(&bell, &part).unwrap() - 1.0).abs() < 1e-10);
        let part = QubitPartition::new(3, vec![0]).unwrap();
        assert!((log_negativity(&ghz_rho(), &part).unwrap() - 1.0).abs() < 1e-9);
        // W: trace norm of any one-vs-two partial transpose is 1 + 2*sqrt(2)/3.
        let expect = (1.0 + 2.0 * 2.0f64.sqrt() / 3.0).log2();
        for q in 0..3 {
            let part = QubitPartition::new(3, vec![q]).unwrap();
            assert!((log_negativity(&w_rho(), &part).unwrap() - expect).abs() < 1e-9);
        }
        assert!((expect - 0.958144).abs() < 1e-6);
    }

    #[test]
    fn log_negativity_rejects_improper_bipartition() {
        let bell = projector(&make_bell()).unwrap();
        let full = QubitPartition::new(2, vec![0, 1]).unwrap();
        assert!(log_negativity(&bell, &full).is_err());
        let empty = QubitPartition::new(2, vec![]).unwrap();
        assert!(log_negativity(&bell, &empty).is_err());
    }

    #[test]
    fn concurrence_reference_cases() {
        let bell = projector(&make_bell()).unwrap();
        assert!((concurrence(&bell).unwrap() - 1.0).abs() < 1e-10);
        // lambda spectrum of the Bell case is (1, 0, 0, 0).
        let l = spin_flip_lambdas(&bell).unwrap();
        assert!((l[0] - 1.0).abs() < 1e-8 && l[1].abs() < 1e-6);

        let mut amps = vec![Complex64::ZERO; 4];
        amps[2] = Complex64::ONE;
        let product = projector(&PureState::new(2, amps).unwrap()).unwrap();
        assert!(concurrence(&product).unwrap().abs() < 1e-10);

        // Any two-qubit reduction of W gives C = 2/3.
        for keep in [[0usize, 1], [0, 2], [1, 2]] {
            let pair = reduce(&w_rho(), &keep).unwrap();
            assert!((concurrence(&pair).unwrap() - 2.0 / 3.0).abs() < 1e-10);
        }
        assert!(concurrence(&ghz_rho()).is_err());
    }

    /// Characteristic polynomial of a 4x4 complex matrix via
    /// Faddeev-LeVerrier; coefficients of x^4 + c3 x^3 + c2 x^2 + c1 x + c0.
    fn char_poly_4(m: &ComplexMatrix) -> [Complex64; 4] {
        let mut coeffs = [Complex64::ZERO; 4];
        let mut mk = ComplexMatrix::identity(4);
        for k in 1..=4usize {
            let c = -(m.matmul(&mk).trace()) / k as f64;
            coeffs[4 - k] = c;
            mk = m.matmul(&mk);
            for d in 0..4 {
                mk[(d, d)] += c;
            }
        }
        coeffs
    }

    #[test]
    fn concurrence_matches_char_poly_oracle() {
        // The lambda_k^2 from the Hermitian form must be the roots of
        // det(x I - rho rho_tilde); compare elementary symmetric polynomials.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let m = crate::linalg::test_support::random_density_matrix(&mut rng, 2);
            let rho = DensityOperator::from_matrix(2, m).unwrap();
            let sy = wigner::pauli_matrix(2);
            let yy = linalg::tensor_product(&sy, &sy);
            let tilde = yy.matmul(&rho.matrix().conjugate()).matmul(&yy);
            let prod = rho.matrix().matmul(&tilde);
            let c = char_poly_4(&prod);

            let l = spin_flip_lambdas(&rho).unwrap();
            let r: Vec<f64> = l.iter().map(|x| x * x).collect();
            let e1 = r.iter().sum::<f64>();
            let e2 = r[0] * (r[1] + r[2] + r[3]) + r[1] * (r[2] + r[3]) + r[2] * r[3];
            let e3 =
                r[0] * r[1] * r[2] + r[0] * r[1] * r[3] + r[0] * r[2] * r[3] + r[1] * r[2] * r[3];
            let e4 = r[0] * r[1] * r[2] * r[3];
            assert!((c[3].re + e1).abs() < 1e-8, "e1");
            assert!((c[2].re - e2).abs() < 1e-8, "e2");
            assert!((c[1].re + e3).abs() < 1e-8, "e3");
            assert!((c[0].re - e4).abs() < 1e-8, "e4");
            assert!(c.iter().all(|z| z.im.abs() < 1e-9));
        }
    }

    #[test]
    fn tau2_reference_cases() {
        assert!(tau2(&ghz_rho()).unwrap().abs() < 1e-10);
        assert!((tau2(&w_rho()).unwrap() - 4.0 / 9.0).abs() < 1e-10);
        assert!(tau2(&ket000()).unwrap().abs() < 1e-12);
        assert!(tau2(&maximally_mixed(2)).is_err());
    }

    #[test]
    fn tau3_reference_cases() {
        for pivot in 0..3 {
            assert!((tau3_paper(&ghz_rho(), pivot).unwrap() - (7.0f64 / 4.0).sqrt()).abs() < 1e-9);
            let w_expect = (7.0 / 4.0 * 8.0 / 9.0f64).sqrt() - 8.0 / 9.0;
            assert!((tau3_paper(&w_rho(), pivot).unwrap() - w_expect).abs() < 1e-9);
            assert!(tau3_paper(&ket000(), pivot).unwrap().abs() < 1e-9);

            assert!((tau3_ckw(&ghz_rho(), pivot).unwrap() - 1.0).abs() < 1e-9);
            assert!(tau3_ckw(&w_rho(), pivot).unwrap().abs() < 1e-9);
            assert!(tau3_ckw(&ket000(), pivot).unwrap().abs() < 1e-12);
        }
        assert!(tau3_paper(&ghz_rho(), 3).is_err());
        assert!(tau3_ckw(&maximally_mixed(2), 0).is_err());
    }

    #[test]
    fn fingerprint_reference_cases() {
        // Cheap deterministic volume settings keep this test fast.
        let config = FingerprintConfig {
            volume_method: VolumeMethod::Grid { points_per_dim: 4 },
            grid: QuadratureGrid::default_grid(),
        };
        let r = fingerprint(&ghz_rho(), Some(&make_ghz()), &config).unwrap();
        assert!(r.tau2.unwrap().abs() < 1e-10);
        assert!(r.integrated_ea.abs() < 1e-12);
        assert!(r.linear_entropy.abs() < 1e-12);
        assert!((r.fidelity_vs_target.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.purity - 1.0).abs() < 1e-12);

        let r = fingerprint(&w_rho(), None, &config).unwrap();
        assert!((r.tau2.unwrap() - 4.0 / 9.0).abs() < 1e-10);
        assert!(r.tau3_ckw.unwrap().abs() < 1e-9);
        assert!(r.fidelity_vs_target.is_none());

        let r = fingerprint(&maximally_mixed(3), None, &config).unwrap();
        assert_eq!(r.negative_volume, 0.0);
        assert!((r.linear_entropy - 1.0).abs() < 1e-12);
        assert!(r.log_negativity.unwrap().mean.abs() < 1e-10);
        assert!(r.tau2.unwrap().abs() < 1e-12);

        // n != 3: tangle entries are absent, scalar entries still populated.
        let r = fingerprint(&projector(&make_bell()).unwrap(), None, &config).unwrap();
        assert!(r.tau2.is_none() && r.log_negativity.is_none() && r.tau3_paper.is_none());
        assert!((r.purity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_serializes_with_bipartition_keys() {
        let config = FingerprintConfig {
            volume_method: VolumeMethod::Grid { points_per_dim: 3 },
            grid: QuadratureGrid::default_grid(),
        };
        let r = fingerprint(&ghz_rho(), None, &config).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        for key in [
            "\"1|23\"",
            "\"2|13\"",
            "\"3|12\"",
            "\"mean\"",
            "\"tau3_paper\"",
            "\"tau3_ckw\"",
        ] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        let back: QuantifierReport = serde_json::from_str(&json).unwrap();
        assert!((back.negative_volume - r.negative_volume).abs() < 1e-12);
        assert!((back.purity - r.purity).abs() < 1e-12);
        let (a, b) = (back.log_negativity.unwrap(), r.log_negativity.unwrap());
        assert!((a.q1_vs_23 - b.q1_vs_23).abs() < 1e-12);
        assert!((a.mean - b.mean).abs() < 1e-12);
        assert!((back.tau3_paper.unwrap() - r.tau3_paper.unwrap()).abs() < 1e-12);
    }
}
