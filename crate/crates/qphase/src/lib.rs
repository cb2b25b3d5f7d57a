//! Phase-space analysis toolkit for few-qubit states.
//!
//! The crate computes the qubit Wigner quasi-probability function built from
//! the extended parity `I − √3 σz`, slices and integrates it over the
//! per-qubit product measure, quantifies entanglement (tangles, negativity,
//! concurrence) and purity, and reconstructs density operators from simulated
//! Pauli-basis counts via iterative maximum-likelihood tomography.
//!
//! Modules:
//! - [`linalg`]: dense complex matrices, partial trace/transpose, Hermitian
//!   eigensolving (cyclic Jacobi), PSD square root, trace norm.
//! - [`states`]: GHZ/W/Bell factories, noise channels, fidelity and purity.
//! - [`wigner`]: kernel construction, Pauli-coefficient contraction,
//!   equal-angle slices, quadrature, negative volume.
//! - [`quantifiers`]: linear entropy, log-negativity, concurrence, two- and
//!   three-tangles, and the radar fingerprint report.
//! - [`tomography`]: Born probabilities, seeded count simulation, diluted
//!   RρR maximum-likelihood reconstruction.
//! - [`io`]: JSON/CSV file formats shared with the `qphase` CLI.

pub mod error;
pub mod io;
pub mod linalg;
pub mod quantifiers;
pub mod states;
pub mod tomography;
pub mod wigner;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
