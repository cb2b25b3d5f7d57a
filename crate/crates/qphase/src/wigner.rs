//! Qubit Wigner function: kernel construction, fast evaluation via
//! Pauli-coefficient contraction, equal-angle slices, quadrature, and the
//! negative volume.
//!
//! The single-qubit kernel is the rotated extended parity
//! `(1/2) U (I - sqrt(3) sigma_z) U†` with `U = e^{i sigma_z phi} e^{i sigma_y theta}`;
//! the n-qubit kernel is its tensor product. The phase-space measure is
//! `df(theta, phi) = (1/pi) sin(2 theta) dtheta dphi` per qubit with
//! `theta in [0, pi/2]`, `phi in [0, 2 pi)`; the substitution `u = sin^2 theta`
//! turns it into `(1/pi) du dphi`, so Gauss-Legendre in `u` plus a periodic
//! trapezoid in `phi` integrates every polynomial appearing in
//! normalization, overlap, and kernel-reconstruction sums exactly.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::{self, ComplexMatrix};
use crate::states::{self, DensityOperator};
use crate::{Error, Result};

use std::f64::consts::PI;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Per-qubit Euler angle pairs parameterizing the 2n-dimensional phase space.
///
/// The third Euler angle is fixed to 0 throughout: the extended parity
/// commutes with `e^{i sigma_z Phi}`, so it drops out of every kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpacePoint {
    n_qubits: usize,
    angles: Vec<(f64, f64)>,
}

impl PhaseSpacePoint {
    /// Requires `theta_i in [0, pi/2]` and `phi_i in [0, 2 pi)`.
    pub fn new(angles: Vec<(f64, f64)>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidArgument("at least one qubit required".into()));
        }
        for &(theta, phi) in &angles {
            if !(0.0..=PI / 2.0 + 1e-12).contains(&theta) || !(0.0..2.0 * PI).contains(&phi) {
                return Err(Error::InvalidArgument(format!(
                    "angles out of range: theta = {theta}, phi = {phi}"
                )));
            }
        }
        Ok(Self {
            n_qubits: angles.len(),
            angles,
        })
    }

    /// All qubits at the same `(theta, phi)`.
    pub fn equal_angles(n_qubits: usize, theta: f64, phi: f64) -> Result<Self> {
        Self::new(vec![(theta, phi); n_qubits])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn angles(&self) -> &[(f64, f64)] {
        &self.angles
    }
}

/// Real Pauli-basis expansion coefficients of a density operator,
/// `coeffs[a] = Tr[rho sigma_a] / 2^n`, indexed with qubit 0 as the most
/// significant base-4 digit (0 = I, 1 = X, 2 = Y, 3 = Z).
#[derive(Debug, Clone, PartialEq)]
pub struct PauliCoefficientTensor {
    n_qubits: usize,
    coeffs: Vec<f64>,
}

impl PauliCoefficientTensor {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Wraps raw coefficients (length must be 4^n, same digit convention as
/// [`pauli_coefficients`]) for use with the tensor utilities.
pub fn pauli_coefficients_from_raw(n_qubits: usize, coeffs: Vec<f64>) -> PauliCoefficientTensor {
    assert_eq!(
        coeffs.len(),
        1usize << (2 * n_qubits),
        "need 4^n coefficients"
    );
    PauliCoefficientTensor { n_qubits, coeffs }
}

/// Rotation axis for pre-rotated slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn matrix(self) -> ComplexMatrix {
        pauli_matrix(match self {
            Axis::X => 1,
            Axis::Y => 2,
            Axis::Z => 3,
        })
    }
}

/// Grid for equal-angle slices, with an optional single-qubit pre-rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub grid_theta: usize,
    pub grid_phi: usize,
    pub pre_rotation: Option<(usize, Axis, f64)>,
}

impl SliceSpec {
    pub fn new(grid_theta: usize, grid_phi: usize) -> Result<Self> {
        if grid_theta < 2 || grid_phi < 2 {
            return Err(Error::InvalidArgument("slice grids must be >= 2".into()));
        }
        Ok(Self {
            grid_theta,
            grid_phi,
            pre_rotation: None,
        })
    }

    pub fn with_rotation(mut self, qubit: usize, axis: Axis, angle: f64) -> Self {
        self.pre_rotation = Some((qubit, axis, angle));
        self
    }
}

/// Equal-angle slice samples, row-major over the theta x phi grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceData {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// `values[i * phis.len() + j] = W(theta_i, phi_j)`.
    pub values: Vec<f64>,
}

/// Per-qubit quadrature: Gauss-Legendre nodes in `u = sin^2 theta` on (0, 1)
/// (weights sum to 1) and uniform periodic nodes in `phi` (weights sum to
/// 2 pi).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    nodes_u: Vec<(f64, f64)>,
    nodes_phi: Vec<(f64, f64)>,
}

impl QuadratureGrid {
    pub fn new(n_u: usize, n_phi: usize) -> Result<Self> {
        if n_u == 0 || n_phi == 0 {
            return Err(Error::InvalidArgument(
                "quadrature node counts must be positive".into(),
            ));
        }
        let nodes_u = gauss_legendre_unit(n_u);
        let w = 2.0 * PI / n_phi as f64;
        let nodes_phi = (0..n_phi).map(|k| (k as f64 * w, w)).collect();
        Ok(Self { nodes_u, nodes_phi })
    }

    /// 8 u-nodes x 16 phi-nodes: exact for every per-qubit integrand this
    /// module produces.
    pub fn default_grid() -> Self {
        Self::new(8, 16).expect("static sizes")
    }

    pub fn nodes_u(&self) -> &[(f64, f64)] {
        &self.nodes_u
    }

    pub fn nodes_phi(&self) -> &[(f64, f64)] {
        &self.nodes_phi
    }

    fn check_exactness(&self) -> Result<()> {
        if self.nodes_u.len() < 3 || self.nodes_phi.len() < 8 {
            return Err(Error::InvalidArgument(
                "exactness-grade grid requires >= 3 u-nodes and >= 8 phi-nodes".into(),
            ));
        }
        Ok(())
    }

    /// Iterates `(u, phi, weight)` with `weight = w_u * w_phi / pi`; the
    /// weights sum to the per-qubit measure mass 2.
    fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut pts = Vec::with_capacity(self.nodes_u.len() * self.nodes_phi.len());
        for &(u, wu) in &self.nodes_u {
            for &(phi, wp) in &self.nodes_phi {
                pts.push((u, phi, wu * wp / PI));
            }
        }
        pts
    }
}

/// Gauss-Legendre nodes/weights on (0, 1), weights summing to 1.
fn gauss_legendre_unit(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Compensated (Kahan) accumulator for the long phase-space sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// The Pauli matrix with label `a` (0 = I, 1 = X, 2 = Y, 3 = Z).
pub fn pauli_matrix(a: usize) -> ComplexMatrix {
    let c = Complex64::new;
    match a {
        0 => ComplexMatrix::identity(2),
        1 => ComplexMatrix::from_rows(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]]),
        2 => ComplexMatrix::from_rows(&[&[c(0.0, 0.0), c(0.0, -1.0)], &[c(0.0, 1.0), c(0.0, 0.0)]]),
        3 => ComplexMatrix::diag(&[1.0, -1.0]),
        _ => panic!("Pauli label must be in 0..4"),
    }
}

/// Full Euler rotation `e^{i sigma_z phi} e^{i sigma_y theta} e^{i sigma_z Phi}`.
pub fn euler_rotation(theta: f64, phi: f64, third: f64) -> ComplexMatrix {
    let c = Complex64::new;
    let (st, ct) = theta.sin_cos();
    let ry = ComplexMatrix::from_rows(&[&[c(ct, 0.0), c(st, 0.0)], &[c(-st, 0.0), c(ct, 0.0)]]);
    let zl = ComplexMatrix::from_rows(&[
        &[Complex64::from_polar(1.0, phi), c(0.0, 0.0)],
        &[c(0.0, 0.0), Complex64::from_polar(1.0, -phi)],
    ]);
    let zr = ComplexMatrix::from_rows(&[
        &[Complex64::from_polar(1.0, third), c(0.0, 0.0)],
        &[c(0.0, 0.0), Complex64::from_polar(1.0, -third)],
    ]);
    zl.matmul(&ry).matmul(&zr)
}

/// Rotated extended parity with an explicit third Euler angle (which cancels
/// inside the conjugation; exposed for the invariance test).
pub fn single_qubit_kernel_euler(theta: f64, phi: f64, third: f64) -> ComplexMatrix {
    let parity = ComplexMatrix::identity(2).sub(&pauli_matrix(3).scale(Complex64::new(SQRT3, 0.0)));
    let u = euler_rotation(theta, phi, third);
    u.matmul(&parity)
        .matmul(&u.adjoint())
        .scale(Complex64::new(0.5, 0.0))
}

/// `(1/2) U (I - sqrt(3) sigma_z) U†`; Hermitian, trace 1, eigenvalues
/// `(1 ± sqrt(3))/2` at every point.
pub fn single_qubit_kernel(theta: f64, phi: f64) -> ComplexMatrix {
    single_qubit_kernel_euler(theta, phi, 0.0)
}

/// Tensor product of single-qubit kernels over all qubits.
pub fn kernel(point: &PhaseSpacePoint) -> ComplexMatrix {
    let mut out = ComplexMatrix::identity(1);
    for &(theta, phi) in point.angles() {
        out = linalg::tensor_product(&out, &single_qubit_kernel(theta, phi));
    }
    out
}

/// Pauli expectations of the single-qubit kernel,
/// `f_a(theta, phi) = Tr[sigma_a Delta_1(theta, phi)]`.
pub fn pauli_features(theta: f64, phi: f64) -> [f64; 4] {
    let s2 = (2.0 * theta).sin();
    let c2 = (2.0 * theta).cos();
    features_from_trig(s2, c2, phi)
}

/// Features in the substituted variable `u = sin^2 theta`.
pub fn pauli_features_u(u: f64, phi: f64) -> [f64; 4] {
    let s2 = 2.0 * (u * (1.0 - u)).max(0.0).sqrt();
    let c2 = 1.0 - 2.0 * u;
    features_from_trig(s2, c2, phi)
}

#[inline]
fn features_from_trig(sin2t: f64, cos2t: f64, phi: f64) -> [f64; 4] {
    let (s2p, c2p) = (2.0 * phi).sin_cos();
    [
        1.0,
        SQRT3 * sin2t * c2p,
        -SQRT3 * sin2t * s2p,
        -SQRT3 * cos2t,
    ]
}

/// Expands `rho` in the Pauli basis; the round trip through
/// [`pauli_tensor_to_matrix`] reproduces `rho` within 1e-12.
pub fn pauli_coefficients(rho: &DensityOperator) -> PauliCoefficientTensor {
    pauli_coefficients_of_matrix(rho.n_qubits(), rho.matrix())
}

fn pauli_coefficients_of_matrix(n: usize, m: &ComplexMatrix) -> PauliCoefficientTensor {
    let dim = 1usize << n;
    let count = 1usize << (2 * n);
    let mut coeffs = vec![0.0f64; count];
    for (label, c) in coeffs.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        for j in 0..dim {
            // sigma_label |j> = phase |k>, built per qubit.
            let mut k = 0usize;
            let mut phase = Complex64::ONE;
            for q in 0..n {
                let letter = (label >> (2 * (n - 1 - q))) & 3;
                let b = linalg::qubit_bit(j, q, n);
                let (out_bit, factor) = pauli_action(letter, b);
                k |= out_bit << (n - 1 - q);
                phase *= factor;
            }
            acc += phase * m[(j, k)];
        }
        debug_assert!(acc.im.abs() < 1e-10);
        *c = acc.re / dim as f64;
    }
    PauliCoefficientTensor {
        n_qubits: n,
        coeffs,
    }
}

/// `sigma_letter |b> = factor |out_bit>`.
#[inline]
fn pauli_action(letter: usize, b: usize) -> (usize, Complex64) {
    match letter {
        0 => (b, Complex64::ONE),
        1 => (1 - b, Complex64::ONE),
        2 => (1 - b, if b == 0 { Complex64::I } else { -Complex64::I }),
        3 => (
            b,
            if b == 0 {
                Complex64::ONE
            } else {
                -Complex64::ONE
            },
        ),
        _ => unreachable!(),
    }
}

/// Rebuilds `sum_a coeffs[a] sigma_a` as a matrix.
pub fn pauli_tensor_to_matrix(coeffs: &PauliCoefficientTensor) -> ComplexMatrix {
    let n = coeffs.n_qubits();
    let dim = 1usize << n;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (label, &c) in coeffs.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for j in 0..dim {
            let mut k = 0usize;
            let mut phase = Complex64::ONE;
            for q in 0..n {
                let letter = (label >> (2 * (n - 1 - q))) & 3;
                let b = linalg::qubit_bit(j, q, n);
                let (out_bit, factor) = pauli_action(letter, b);
                k |= out_bit << (n - 1 - q);
                phase *= factor;
            }
            // (sigma_label)_{k j} = phase
            m[(k, j)] += phase * c;
        }
    }
    m
}

/// Contracts the leading qubit index with a feature 4-vector.
#[inline]
fn contract_leading(coeffs: &[f64], f: &[f64; 4]) -> Vec<f64> {
    let stride = coeffs.len() / 4;
    let mut out = vec![0.0f64; stride];
    for a in 0..4 {
        let fa = f[a];
        if fa == 0.0 {
            continue;
        }
        let block = &coeffs[a * stride..(a + 1) * stride];
        for (o, &b) in out.iter_mut().zip(block) {
            *o += fa * b;
        }
    }
    out
}

/// In-place variant for hot loops: contracts the leading index, shrinking
/// the live prefix of `buf` by 4x; safe because slot `r` is read before it
/// is written.
#[inline]
fn contract_leading_in_place(buf: &mut [f64], len: usize, f: &[f64; 4]) -> usize {
    let stride = len / 4;
    for r in 0..stride {
        buf[r] = f[0] * buf[r]
            + f[1] * buf[stride + r]
            + f[2] * buf[2 * stride + r]
            + f[3] * buf[3 * stride + r];
    }
    stride
}

/// `W(Omega) = sum_a coeffs[a] prod_i f_{a_i}(theta_i, phi_i)`; agrees with
/// `Tr[rho kernel(Omega)]` within 1e-10.
pub fn evaluate(coeffs: &PauliCoefficientTensor, point: &PhaseSpacePoint) -> Result<f64> {
    if coeffs.n_qubits() != point.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients are for {} qubits, point has {}",
            coeffs.n_qubits(),
            point.n_qubits()
        )));
    }
    let mut buf = coeffs.coeffs().to_vec();
    let mut len = buf.len();
    for &(theta, phi) in point.angles() {
        len = contract_leading_in_place(&mut buf, len, &pauli_features(theta, phi));
    }
    Ok(buf[0])
}

fn rotated_density(
    rho: &DensityOperator,
    rotation: &(usize, Axis, f64),
) -> Result<DensityOperator> {
    let (qubit, axis, angle) = rotation;
    if *qubit >= rho.n_qubits() {
        return Err(Error::InvalidQubitIndex {
            index: *qubit,
            n_qubits: rho.n_qubits(),
        });
    }
    // exp(-i angle sigma_axis / 2)
    let (s, c) = (angle / 2.0).sin_cos();
    let rot = ComplexMatrix::identity(2)
        .scale(Complex64::new(c, 0.0))
        .sub(&axis.matrix().scale(Complex64::new(0.0, s)));
    let full = states::embed_single_qubit(&rot, *qubit, rho.n_qubits());
    let m = full.matmul(rho.matrix()).matmul(&full.adjoint());
    let m = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    DensityOperator::from_matrix(rho.n_qubits(), m)
}

/// W on the equal-angle grid: theta uniform over [0, pi/2] including both
/// endpoints, phi uniform over [0, 2 pi) excluding the right endpoint. An
/// optional pre-rotation `exp(-i angle sigma_axis / 2)` is applied to one
/// qubit first.
pub fn equal_angle_slice(rho: &DensityOperator, spec: &SliceSpec) -> Result<SliceData> {
    let rho = match &spec.pre_rotation {
        Some(rot) => rotated_density(rho, rot)?,
        None => rho.clone(),
    };
    let coeffs = pauli_coefficients(&rho);
    let n = rho.n_qubits();
    let thetas: Vec<f64> = (0..spec.grid_theta)
        .map(|i| i as f64 * (PI / 2.0) / (spec.grid_theta - 1) as f64)
        .collect();
    let phis: Vec<f64> = (0..spec.grid_phi)
        .map(|j| j as f64 * 2.0 * PI / spec.grid_phi as f64)
        .collect();
    let values: Vec<f64> = thetas
        .par_iter()
        .flat_map_iter(|&theta| {
            let coeffs = &coeffs;
            let mut buf = vec![0.0f64; coeffs.coeffs().len()];
            phis.iter().map(move |&phi| {
                let f = pauli_features(theta, phi);
                buf.copy_from_slice(coeffs.coeffs());
                let mut len = buf.len();
                for _ in 0..n {
                    len = contract_leading_in_place(&mut buf, len, &f);
                }
                buf[0]
            })
        })
        .collect();
    Ok(SliceData {
        thetas,
        phis,
        values,
    })
}

/// Per-qubit integrals of the features over the quadrature grid.
fn feature_integrals(grid: &QuadratureGrid) -> [f64; 4] {
    let mut acc = [KahanSum::default(); 4];
    for (u, phi, w) in grid.points() {
        let f = pauli_features_u(u, phi);
        for a in 0..4 {
            acc[a].add(w * f[a]);
        }
    }
    [
        acc[0].value(),
        acc[1].value(),
        acc[2].value(),
        acc[3].value(),
    ]
}

/// `int W dOmega` over the 2n-dimensional product measure; equals 1 for any
/// density operator up to rounding.
pub fn integrate(coeffs: &PauliCoefficientTensor, grid: &QuadratureGrid) -> Result<f64> {
    grid.check_exactness()?;
    let g = feature_integrals(grid);
    let mut cur = coeffs.coeffs().to_vec();
    for _ in 0..coeffs.n_qubits() {
        cur = contract_leading(&cur, &g);
    }
    Ok(cur[0])
}

/// Per-qubit Gram matrix `M[a][b] = int f_a f_b df`.
fn feature_gram(grid: &QuadratureGrid) -> [[f64; 4]; 4] {
    let mut acc = [[KahanSum::default(); 4]; 4];
    for (u, phi, w) in grid.points() {
        let f = pauli_features_u(u, phi);
        for a in 0..4 {
            for b in 0..4 {
                acc[a][b].add(w * f[a] * f[b]);
            }
        }
    }
    let mut m = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            m[a][b] = acc[a][b].value();
        }
    }
    m
}

/// `int W1 W2 dOmega`; equals `Tr[rho1 rho2]` (proportionality constant 1
/// under this measure convention).
pub fn overlap(
    c1: &PauliCoefficientTensor,
    c2: &PauliCoefficientTensor,
    grid: &QuadratureGrid,
) -> Result<f64> {
    if c1.n_qubits() != c2.n_qubits() {
        return Err(Error::DimensionMismatch(format!(
            "operand qubit counts differ: {} vs {}",
            c1.n_qubits(),
            c2.n_qubits()
        )));
    }
    grid.check_exactness()?;
    let gram = feature_gram(grid);
    // Transform each qubit index of c1 by the Gram matrix, then contract
    // against c2. Each pass consumes the leading index and appends the
    // transformed one, so n passes restore the original ordering.
    let mut cur = c1.coeffs().to_vec();
    for _ in 0..c1.n_qubits() {
        let stride = cur.len() / 4;
        let mut next = vec![0.0f64; cur.len()];
        for b in 0..4 {
            for r in 0..stride {
                let mut acc = 0.0;
                for (a, row) in gram.iter().enumerate() {
                    acc += row[b] * cur[a * stride + r];
                }
                next[r * 4 + b] = acc;
            }
        }
        cur = next;
    }
    let mut acc = KahanSum::default();
    for (x, y) in cur.iter().zip(c2.coeffs()) {
        acc.add(x * y);
    }
    Ok(acc.value())
}

/// Recovers `rho = int dOmega W(Omega) Delta(Omega)` from a W-value
/// evaluator sampled on the tensor quadrature grid.
pub fn reconstruct_from_wigner<F>(
    eval: F,
    n_qubits: usize,
    grid: &QuadratureGrid,
) -> Result<DensityOperator>
where
    F: Fn(&PhaseSpacePoint) -> f64 + Sync,
{
    grid.check_exactness()?;
    let pts = grid.points();
    let count = 1usize << (2 * n_qubits);

    // Depth-first over the per-qubit grid, carrying the running weight and
    // the prefix feature products for every Pauli label prefix. The first
    // qubit's points fan out in parallel; partial sums merge sequentially in
    // point order so the result is independent of the thread count.
    fn recurse<F: Fn(&PhaseSpacePoint) -> f64>(
        eval: &F,
        pts: &[(f64, f64, f64)],
        n: usize,
        angles: &mut Vec<(f64, f64)>,
        weight: f64,
        prefix: &[f64],
        accum: &mut [KahanSum],
    ) {
        if angles.len() == n {
            let point = PhaseSpacePoint {
                n_qubits: n,
                angles: angles.clone(),
            };
            let w_val = eval(&point) * weight;
            for (acc, &p) in accum.iter_mut().zip(prefix) {
                acc.add(w_val * p);
            }
            return;
        }
        if angles.len() + 1 == n {
            // Last qubit: gather the four feature moments of W over its grid
            // first, then fan them out across the prefix products once.
            let mut s = [KahanSum::default(); 4];
            for &(u, phi, w) in pts {
                let theta = u.sqrt().asin();
                angles.push((theta, phi));
                let point = PhaseSpacePoint {
                    n_qubits: n,
                    angles: angles.clone(),
                };
                let w_val = eval(&point) * weight * w;
                angles.pop();
                let f = pauli_features_u(u, phi);
                for (acc, &fa) in s.iter_mut().zip(&f) {
                    acc.add(w_val * fa);
                }
            }
            for (p_idx, &p) in prefix.iter().enumerate() {
                for (a, acc) in s.iter().enumerate() {
                    accum[p_idx * 4 + a].add(p * acc.value());
                }
            }
            return;
        }
        for &(u, phi, w) in pts {
            let theta = u.sqrt().asin();
            let f = pauli_features_u(u, phi);
            let mut next = Vec::with_capacity(prefix.len() * 4);
            for &p in prefix {
                for &fa in &f {
                    next.push(p * fa);
                }
            }
            angles.push((theta, phi));
            recurse(eval, pts, n, angles, weight * w, &next, accum);
            angles.pop();
        }
    }
    let partials: Vec<Vec<f64>> = pts
        .par_iter()
        .map(|&(u, phi, w)| {
            let theta = u.sqrt().asin();
            let prefix = pauli_features_u(u, phi).to_vec();
            let mut angles = vec![(theta, phi)];
            let mut accum = vec![KahanSum::default(); count];
            recurse(&eval, &pts, n_qubits, &mut angles, w, &prefix, &mut accum);
            accum.iter().map(|k| k.value()).collect()
        })
        .collect();
    let mut accum = vec![KahanSum::default(); count];
    for part in partials {
        for (a, v) in accum.iter_mut().zip(part) {
            a.add(v);
        }
    }

    let dim = 1usize << n_qubits;
    let coeffs = PauliCoefficientTensor {
        n_qubits,
        coeffs: accum.iter().map(|k| k.value() / dim as f64).collect(),
    };
    let m = pauli_tensor_to_matrix(&coeffs);
    let m = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    DensityOperator::from_matrix(n_qubits, m)
}

/// How to estimate the negative volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeMethod {
    /// Midpoint tensor grid on `(u, phi)`, `points_per_dim` each; no error bar.
    Grid { points_per_dim: usize },
    /// Uniform `(u, phi)` sampling (an exact sampler of the measure), with a
    /// standard error.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Result of a negative-volume estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeEstimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

/// `V_rho = int (|W| - W) dOmega`.
pub fn negative_volume(rho: &DensityOperator, method: VolumeMethod) -> Result<VolumeEstimate> {
    let coeffs = pauli_coefficients(rho);
    let n = rho.n_qubits();
    match method {
        VolumeMethod::Grid { points_per_dim } => {
            if points_per_dim < 2 {
                return Err(Error::InvalidArgument(
                    "grid method needs >= 2 points per dimension".into(),
                ));
            }
            let npts = points_per_dim;
            let features: Vec<[f64; 4]> = (0..npts)
                .flat_map(|i| {
                    let u = (i as f64 + 0.5) / npts as f64;
                    (0..npts).map(move |j| {
                        let phi = (j as f64 + 0.5) * 2.0 * PI / npts as f64;
                        pauli_features_u(u, phi)
                    })
                })
                .collect();
            // Staged contraction: fix qubit 0's grid point, contract, recurse.
            // Parallel over the outer loop with a deterministic sequential merge.
            fn level(cur: &[f64], features: &[[f64; 4]], depth: usize, n: usize) -> f64 {
                if depth == n {
                    let w = cur[0];
                    return w.abs() - w;
                }
                let mut acc = KahanSum::default();
                if cur.len() == 4 {
                    // Innermost qubit: finish the contraction without
                    // allocating per grid point.
                    for f in features {
                        let w = f[0] * cur[0] + f[1] * cur[1] + f[2] * cur[2] + f[3] * cur[3];
                        acc.add(w.abs() - w);
                    }
                    return acc.value();
                }
                for f in features {
                    acc.add(level(&contract_leading(cur, f), features, depth + 1, n));
                }
                acc.value()
            }
            let partials: Vec<f64> = features
                .par_iter()
                .map(|f| level(&contract_leading(coeffs.coeffs(), f), &features, 1, n))
                .collect();
            let mut total = KahanSum::default();
            for p in partials {
                total.add(p);
            }
            let cell = 2.0 / (npts * npts) as f64;
            Ok(VolumeEstimate {
                value: total.value() * cell.powi(n as i32),
                std_error: None,
            })
        }
        VolumeMethod::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidArgument(
                    "monte-carlo needs at least one sample".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mass = (1u64 << n) as f64;
            let mut mean = 0.0f64;
            let mut m2 = 0.0f64;
            let mut buf = vec![0.0f64; coeffs.coeffs().len()];
            for k in 0..samples {
                buf.copy_from_slice(coeffs.coeffs());
                let mut len = buf.len();
                for _ in 0..n {
                    let u: f64 = rng.random();
                    let phi: f64 = rng.random::<f64>() * 2.0 * PI;
                    len = contract_leading_in_place(&mut buf, len, &pauli_features_u(u, phi));
                }
                let g = buf[0].abs() - buf[0];
                let delta = g - mean;
                mean += delta / (k + 1) as f64;
                m2 += delta * (g - mean);
            }
            let std_error = if samples > 1 {
                mass * (m2 / (samples - 1) as f64 / samples as f64).sqrt()
            } else {
                f64::INFINITY
            };
            Ok(VolumeEstimate {
                value: mass * mean,
                std_error: Some(std_error),
            })
        }
    }
}

/// `int W(theta, ..., theta, phi, ..., phi) df(theta, phi)` over the
/// single-pair measure (total mass 2).
pub fn integrated_ea_slice(rho: &DensityOperator, grid: &QuadratureGrid) -> Result<f64> {
    grid.check_exactness()?;
    let coeffs = pauli_coefficients(rho);
    let n = rho.n_qubits();
    let mut acc = KahanSum::default();
    let mut buf = vec![0.0f64; coeffs.coeffs().len()];
    for (u, phi, w) in grid.points() {
        let f = pauli_features_u(u, phi);
        buf.copy_from_slice(coeffs.coeffs());
        let mut len = buf.len();
        for _ in 0..n {
            len = contract_leading_in_place(&mut buf, len, &f);
        }
        acc.add(w * buf[0]);
    }
    Ok(acc.value())
}
