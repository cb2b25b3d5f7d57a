//! Shared helpers for the integration suites: random states built through the
//! public API only.
#![allow(dead_code)] // each test binary uses a different subset

use num_complex::Complex64;
use rand::Rng;

use qphase::linalg::ComplexMatrix;
use qphase::states::{projector, DensityOperator, PureState};

/// Haar-ish random pure state (normalized complex Gaussian-free amplitudes).
pub fn random_pure(rng: &mut impl Rng, n_qubits: usize) -> PureState {
    let dim = 1usize << n_qubits;
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    PureState::new(n_qubits, amps).expect("normalized amplitudes")
}

/// Full-rank random density operator: convex mixture of random projectors.
pub fn random_density(rng: &mut impl Rng, n_qubits: usize) -> DensityOperator {
    let dim = 1usize << n_qubits;
    let mut weights: Vec<f64> = (0..dim + 1).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mut m = ComplexMatrix::zeros(dim, dim);
    for &w in &weights {
        let p = projector(&random_pure(rng, n_qubits)).expect("projector");
        m = m.add(&p.matrix().scale(Complex64::new(w, 0.0)));
    }
    DensityOperator::from_matrix(n_qubits, m).expect("convex mixture of projectors")
}

/// Random 2x2 unitary from three Euler-like angles.
pub fn random_single_qubit_unitary(rng: &mut impl Rng) -> ComplexMatrix {
    let theta = rng.random::<f64>() * std::f64::consts::PI;
    let phi = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
    let lam = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
    qphase::wigner::euler_rotation(theta, phi, lam)
}
