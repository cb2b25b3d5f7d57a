//! Pauli-basis tomography: Born probabilities, seeded multinomial count
//! simulation over the full 3^n informationally complete setting list, and
//! reconstruction via the diluted RρR maximum-likelihood iteration.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, ComplexMatrix};
use crate::states::{self, DensityOperator};
use crate::{Error, Result};

/// Probability floor applied before any logarithm or count/probability ratio.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

/// One measurement setting: one Pauli basis letter per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MeasurementSetting {
    bases: String,
}

impl MeasurementSetting {
    /// Accepts strings over {X, Y, Z}, one letter per qubit.
    pub fn new(bases: &str) -> Result<Self> {
        if bases.is_empty() || !bases.chars().all(|c| matches!(c, 'X' | 'Y' | 'Z')) {
            return Err(Error::InvalidArgument(format!(
                "setting must be a nonempty string over X/Y/Z, got {bases:?}"
            )));
        }
        Ok(Self {
            bases: bases.to_string(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &str {
        &self.bases
    }

    /// Pauli label (1 = X, 2 = Y, 3 = Z) for one qubit.
    fn letter(&self, qubit: usize) -> usize {
        match self.bases.as_bytes()[qubit] {
            b'X' => 1,
            b'Y' => 2,
            b'Z' => 3,
            _ => unreachable!("validated at construction"),
        }
    }
}

/// All 3^n settings in lexicographic X < Y < Z order.
pub fn all_settings(n_qubits: usize) -> Vec<MeasurementSetting> {
    let mut out = Vec::with_capacity(3usize.pow(n_qubits as u32));
    let letters = ['X', 'Y', 'Z'];
    let count = 3usize.pow(n_qubits as u32);
    for idx in 0..count {
        let mut s = String::with_capacity(n_qubits);
        let mut rem = idx;
        let mut digits = vec![0usize; n_qubits];
        for d in (0..n_qubits).rev() {
            digits[d] = rem % 3;
            rem /= 3;
        }
        for d in digits {
            s.push(letters[d]);
        }
        out.push(MeasurementSetting::new(&s).expect("generated alphabet"));
    }
    out
}

/// Complete set of counts: for every setting, outcome bitstrings with their
/// multiplicities, each setting totalling `shots_per_setting`.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyDataset {
    n_qubits: usize,
    shots_per_setting: u64,
    /// (setting, counts indexed by outcome bitstring value).
    records: Vec<(MeasurementSetting, Vec<u64>)>,
}

impl TomographyDataset {
    /// Validates alphabet, outcome dimensions, and the per-setting shot total.
    pub fn new(
        n_qubits: usize,
        shots_per_setting: u64,
        records: Vec<(MeasurementSetting, Vec<u64>)>,
    ) -> Result<Self> {
        if n_qubits == 0 || shots_per_setting == 0 {
            return Err(Error::InvalidArgument(
                "dataset needs at least one qubit and one shot".into(),
            ));
        }
        let dim = 1usize << n_qubits;
        for (setting, counts) in &records {
            if setting.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch(format!(
                    "setting {} does not match {} qubits",
                    setting.bases(),
                    n_qubits
                )));
            }
            if counts.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "setting {} carries {} outcome slots, expected {}",
                    setting.bases(),
                    counts.len(),
                    dim
                )));
            }
            let total: u64 = counts.iter().sum();
            if total != shots_per_setting {
                return Err(Error::IncompleteDataset(format!(
                    "setting {} sums to {} counts, expected {}",
                    setting.bases(),
                    total,
                    shots_per_setting
                )));
            }
        }
        Ok(Self {
            n_qubits,
            shots_per_setting,
            records,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots_per_setting(&self) -> u64 {
        self.shots_per_setting
    }

    pub fn records(&self) -> &[(MeasurementSetting, Vec<u64>)] {
        &self.records
    }

    /// Errors unless every one of the 3^n settings is present exactly once.
    pub fn check_complete(&self) -> Result<()> {
        let expected = all_settings(self.n_qubits);
        if self.records.len() != expected.len() {
            return Err(Error::IncompleteDataset(format!(
                "{} settings present, expected {}",
                self.records.len(),
                expected.len()
            )));
        }
        let mut seen: Vec<&str> = self.records.iter().map(|(s, _)| s.bases()).collect();
        seen.sort_unstable();
        for want in &expected {
            if seen.binary_search(&want.bases()).is_err() {
                return Err(Error::IncompleteDataset(format!(
                    "setting {} missing",
                    want.bases()
                )));
            }
        }
        Ok(())
    }
}

/// Starting point of the MLE iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedState {
    #[default]
    MaximallyMixed,
    /// Linear inversion from the counts, projected back to a physical state
    /// by eigenvalue clipping and renormalization.
    LinearInversionProjected,
}

/// Iteration knobs for [`mle_reconstruct`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleConfig {
    pub max_iterations: usize,
    /// Relative log-likelihood change below which iteration stops.
    pub convergence_tol: f64,
    /// Dilution epsilon in (0, 1]; 1 is the undiluted RρR step.
    pub dilution: f64,
    pub seed_state: SeedState,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            convergence_tol: 1e-10,
            dilution: 0.5,
            seed_state: SeedState::MaximallyMixed,
        }
    }
}

impl MleConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations must be positive".into(),
            ));
        }
        if self.convergence_tol <= 0.0 || self.convergence_tol.is_nan() {
            return Err(Error::InvalidArgument(
                "convergence_tol must be positive".into(),
            ));
        }
        if !(self.dilution > 0.0 && self.dilution <= 1.0) {
            return Err(Error::InvalidArgument("dilution must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Output of the MLE fit.
#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho_hat: DensityOperator,
    pub iterations: usize,
    pub final_loglik: f64,
    pub converged: bool,
}

/// Normalized eigenvector of `sigma_letter` with eigenvalue `(-1)^bit`.
fn pauli_eigenvector(letter: usize, bit: usize) -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = Complex64::new;
    match (letter, bit) {
        (1, 0) => [c(h, 0.0), c(h, 0.0)],
        (1, 1) => [c(h, 0.0), c(-h, 0.0)],
        (2, 0) => [c(h, 0.0), c(0.0, h)],
        (2, 1) => [c(h, 0.0), c(0.0, -h)],
        (3, 0) => [c(1.0, 0.0), c(0.0, 0.0)],
        (3, 1) => [c(0.0, 0.0), c(1.0, 0.0)],
        _ => unreachable!("letter in 1..4, bit in 0..2"),
    }
}

/// Product eigenvector |s, outcome> over all qubits.
fn outcome_vector(setting: &MeasurementSetting, outcome: usize) -> Vec<Complex64> {
    let n = setting.n_qubits();
    let mut v = vec![Complex64::ONE];
    for q in 0..n {
        let bit = linalg::qubit_bit(outcome, q, n);
        let e = pauli_eigenvector(setting.letter(q), bit);
        let mut next = Vec::with_capacity(v.len() * 2);
        for &a in &v {
            next.push(a * e[0]);
            next.push(a * e[1]);
        }
        v = next;
    }
    v
}

/// Probabilities of the 2^n joint eigenbasis outcomes; bit b on qubit i means
/// eigenvalue (-1)^b of that qubit's Pauli. Sums to 1 within 1e-12.
pub fn born_probabilities(rho: &DensityOperator, setting: &MeasurementSetting) -> Result<Vec<f64>> {
    if setting.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "setting {} does not match {} qubits",
            setting.bases(),
            rho.n_qubits()
        )));
    }
    let dim = rho.dim();
    let mut probs = Vec::with_capacity(dim);
    for outcome in 0..dim {
        let v = outcome_vector(setting, outcome);
        let rv = rho.matrix().matvec(&v);
        let p: Complex64 = v.iter().zip(&rv).map(|(a, b)| a.conj() * b).sum();
        probs.push(p.re.max(0.0));
    }
    Ok(probs)
}

/// One multinomial draw of `shots` over `probs` by sequential binomial
/// splitting (conditional method), using inverse-CDF binomial sampling.
fn multinomial_draw(rng: &mut ChaCha8Rng, probs: &[f64], shots: u64) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass_left: f64 = probs.iter().sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || mass_left <= p {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass_left).clamp(0.0, 1.0);
        let draw = binomial_draw(rng, remaining, q);
        counts[i] = draw;
        remaining -= draw;
        mass_left -= p;
    }
    counts
}

/// Inverse-CDF binomial sample; n here is at most the shot count per setting,
/// so the linear scan stays cheap for the desk-scale datasets this crate
/// targets.
fn binomial_draw(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    let u: f64 = rng.random();
    // Walk the pmf recurrence b(k+1) = b(k) * (n-k)/(k+1) * p/(1-p).
    let ratio = p / (1.0 - p);
    let mut pmf = (1.0 - p).powi(n.min(i32::MAX as u64) as i32);
    if pmf == 0.0 {
        // Underflow regime: fall back to a normal approximation, clamped.
        let mean = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        let z = gaussian(rng);
        return (mean + sd * z).round().clamp(0.0, n as f64) as u64;
    }
    let mut cdf = pmf;
    let mut k = 0u64;
    while cdf < u && k < n {
        pmf *= (n - k) as f64 / (k + 1) as f64 * ratio;
        cdf += pmf;
        k += 1;
    }
    k
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 is kept away from 0.
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Simulates counts for all 3^n settings (lexicographic order), one
/// multinomial draw of size `shots` each; reproducible for a fixed seed.
pub fn simulate_counts(rho: &DensityOperator, shots: u64, seed: u64) -> Result<TomographyDataset> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for setting in all_settings(rho.n_qubits()) {
        let probs = born_probabilities(rho, &setting)?;
        let counts = multinomial_draw(&mut rng, &probs, shots);
        records.push((setting, counts));
    }
    TomographyDataset::new(rho.n_qubits(), shots, records)
}

/// `sum_records count * ln p(outcome | setting, rho)`, with probabilities
/// clamped at [`PROBABILITY_CLAMP`].
pub fn log_likelihood(rho: &DensityOperator, data: &TomographyDataset) -> Result<f64> {
    if data.n_qubits() != rho.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "dataset is over {} qubits, state has {}",
            data.n_qubits(),
            rho.n_qubits()
        )));
    }
    let mut ll = 0.0;
    for (setting, counts) in data.records() {
        let probs = born_probabilities(rho, setting)?;
        for (&count, &p) in counts.iter().zip(&probs) {
            if count > 0 {
                ll += count as f64 * p.max(PROBABILITY_CLAMP).ln();
            }
        }
    }
    Ok(ll)
}

/// `R = sum (count / p) |v><v|` over all recorded outcomes, normalized by the
/// total shot count so the fixed point has unit trace scale.
fn r_operator(rho: &DensityOperator, data: &TomographyDataset) -> Result<ComplexMatrix> {
    let dim = rho.dim();
    let total: u64 = data.shots_per_setting() * data.records().len() as u64;
    let mut r = ComplexMatrix::zeros(dim, dim);
    for (setting, counts) in data.records() {
        let probs = born_probabilities(rho, setting)?;
        for (outcome, (&count, &p)) in counts.iter().zip(&probs).enumerate() {
            if count == 0 {
                continue;
            }
            let w = count as f64 / total as f64 / p.max(PROBABILITY_CLAMP);
            let v = outcome_vector(setting, outcome);
            for i in 0..dim {
                for j in 0..dim {
                    r[(i, j)] += w * v[i] * v[j].conj();
                }
            }
        }
    }
    Ok(r)
}

fn project_to_physical(n_qubits: usize, m: &ComplexMatrix) -> Result<DensityOperator> {
    let h = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    let (vals, vecs) = linalg::hermitian_eigen(&h)?;
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Ok(states::maximally_mixed(n_qubits));
    }
    let dim = h.rows();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for (k, &lam) in clipped.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        let w = lam / total;
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += w * vecs[(i, k)] * vecs[(j, k)].conj();
            }
        }
    }
    let out = out.add(&out.adjoint()).scale(Complex64::new(0.5, 0.0));
    DensityOperator::from_matrix(n_qubits, out)
}

/// Linear-inversion estimate from outcome frequencies, projected physical.
fn linear_inversion_seed(data: &TomographyDataset) -> Result<DensityOperator> {
    let n = data.n_qubits();
    let dim = 1usize << n;
    // Each outcome projector decomposes over sub-tensor Pauli strings; the
    // frequency-weighted sum over all settings overcounts identity-padded
    // strings, so accumulate Pauli coefficients directly instead.
    let count_strings = 1usize << (2 * n);
    let mut coeff = vec![0.0f64; count_strings];
    let mut hits = vec![0u32; count_strings];
    for (setting, counts) in data.records() {
        let shots = data.shots_per_setting() as f64;
        // <sigma_a> over strings a compatible with this setting: a_i in
        // {I, letter_i}. Expectation of the product of (-1)^{bit} over the
        // non-identity positions.
        for mask in 0..(1usize << n) {
            let mut label = 0usize;
            for q in 0..n {
                let digit = if (mask >> (n - 1 - q)) & 1 == 1 {
                    setting.letter(q)
                } else {
                    0
                };
                label = label * 4 + digit;
            }
            let mut exp = 0.0;
            for (outcome, &c) in counts.iter().enumerate() {
                let mut sign = 1.0;
                for q in 0..n {
                    if (mask >> (n - 1 - q)) & 1 == 1 && linalg::qubit_bit(outcome, q, n) == 1 {
                        sign = -sign;
                    }
                }
                exp += sign * c as f64;
            }
            coeff[label] += exp / shots;
            hits[label] += 1;
        }
    }
    for (c, &h) in coeff.iter_mut().zip(&hits) {
        if h > 0 {
            *c /= h as f64 * dim as f64;
        }
    }
    let tensor = crate::wigner::pauli_coefficients_from_raw(n, coeff);
    let m = crate::wigner::pauli_tensor_to_matrix(&tensor);
    project_to_physical(n, &m)
}

/// Diluted RρR fixed-point iteration,
/// `rho <- N[(1 - eps) rho + eps R rho R]`, with a monotone log-likelihood
/// certificate; stops on relative log-likelihood change or `max_iterations`.
pub fn mle_reconstruct(data: &TomographyDataset, config: &MleConfig) -> Result<MleResult> {
    config.validate()?;
    data.check_complete()?;
    let n = data.n_qubits();
    let mut rho = match config.seed_state {
        SeedState::MaximallyMixed => states::maximally_mixed(n),
        SeedState::LinearInversionProjected => linear_inversion_seed(data)?,
    };
    let eps = config.dilution;
    let mut ll = log_likelihood(&rho, data)?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        let r = r_operator(&rho, data)?;
        let rrr = r.matmul(rho.matrix()).matmul(&r);
        let mixed = rho
            .matrix()
            .scale(Complex64::new(1.0 - eps, 0.0))
            .add(&rrr.scale(Complex64::new(eps, 0.0)));
        let tr = mixed.trace().re;
        let next = mixed.scale(Complex64::new(1.0 / tr, 0.0));
        let next = next.add(&next.adjoint()).scale(Complex64::new(0.5, 0.0));
        let next = DensityOperator::from_matrix(n, next)?;
        let next_ll = log_likelihood(&next, data)?;
        debug_assert!(
            next_ll >= ll - 1e-12 * ll.abs().max(1.0),
            "log-likelihood decreased: {ll} -> {next_ll}"
        );
        iterations += 1;
        let rel = (next_ll - ll).abs() / ll.abs().max(1.0);
        rho = next;
        ll = next_ll;
        if rel < config.convergence_tol {
            converged = true;
            break;
        }
    }
    Ok(MleResult {
        rho_hat: rho,
        iterations,
        final_loglik: ll,
        converged,
    })
}
