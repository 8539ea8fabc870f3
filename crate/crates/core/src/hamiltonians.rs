//! Translation-invariant ring Hamiltonians and their Gibbs states.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channels::{pauli, Axis};
use crate::error::{Error, Result};
use crate::qstate::{eigh, kron, spectral_map, symmetrize, CMatrix, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelDescriptor {
    Tfi { h: f64 },
    Xy { gamma: f64, h: f64 },
    Random { seed: u64 },
}

impl std::fmt::Display for ModelDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelDescriptor::Tfi { h } => write!(f, "tfi(h={h})"),
            ModelDescriptor::Xy { gamma, h } => write!(f, "xy(gamma={gamma},h={h})"),
            ModelDescriptor::Random { seed } => write!(f, "random(seed={seed})"),
        }
    }
}

impl ModelDescriptor {
    /// Build the `n`-site ring Hamiltonian this descriptor names.
    pub fn build(&self, n: usize) -> Result<RingHamiltonian> {
        match *self {
            ModelDescriptor::Tfi { h } => tfi_hamiltonian(n, h),
            ModelDescriptor::Xy { gamma, h } => xy_hamiltonian(n, gamma, h),
            ModelDescriptor::Random { seed } => random_two_local_ti(n, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingHamiltonian {
    n_qubits: usize,
    matrix: CMatrix,
    descriptor: ModelDescriptor,
}

impl RingHamiltonian {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn descriptor(&self) -> ModelDescriptor {
        self.descriptor
    }

    /// Ascending spectrum.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.matrix).0
    }

    /// Diagnostic constructor from an arbitrary Hermitian matrix.
    pub fn from_matrix(matrix: CMatrix, descriptor: ModelDescriptor) -> Result<Self> {
        let dev = crate::qstate::hermiticity_error(&matrix);
        if dev > 1e-10 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let d = matrix.nrows();
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::InvalidArgument(format!("dimension {d} is not 2^n")));
        }
        Ok(Self {
            n_qubits: d.trailing_zeros() as usize,
            matrix,
            descriptor,
        })
    }
}

/// Embed a list of single-qubit operators (`None` = identity) as a full tensor product.
fn tensor(ops: &[Option<&CMatrix>]) -> CMatrix {
    let id = CMatrix::identity(2, 2);
    ops.iter()
        .fold(CMatrix::identity(1, 1), |acc, op| kron(&acc, op.unwrap_or(&id)))
}

fn bond(n: usize, j: usize, a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut ops = vec![None; n];
    ops[j] = Some(a);
    ops[(j + 1) % n] = Some(b);
    tensor(&ops)
}

fn site(n: usize, j: usize, a: &CMatrix) -> CMatrix {
    let mut ops = vec![None; n];
    ops[j] = Some(a);
    tensor(&ops)
}

fn check_ring(n: usize) -> Result<()> {
    if !(2..=crate::ansatz::MAX_QUBITS).contains(&n) {
        return Err(Error::InvalidArgument(format!("ring size {n} outside 2..=10")));
    }
    Ok(())
}

/// `H = -sum_j [(1+g)/2 X_j X_{j+1} + (1-g)/2 Y_j Y_{j+1}] - h sum_j Z_j`.
pub fn xy_hamiltonian(n: usize, gamma: f64, h: f64) -> Result<RingHamiltonian> {
    let mut ham = xy_matrix(n, gamma, h)?;
    ham.descriptor = ModelDescriptor::Xy { gamma, h };
    Ok(ham)
}

fn xy_matrix(n: usize, gamma: f64, h: f64) -> Result<RingHamiltonian> {
    check_ring(n)?;
    let d = 1 << n;
    let (x, y, z) = (pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z));
    let cx = C64::new(-(1.0 + gamma) / 2.0, 0.0);
    let cy = C64::new(-(1.0 - gamma) / 2.0, 0.0);
    let mut matrix = CMatrix::zeros(d, d);
    for j in 0..n {
        matrix += bond(n, j, &x, &x) * cx;
        if cy.re != 0.0 {
            matrix += bond(n, j, &y, &y) * cy;
        }
        matrix -= site(n, j, &z) * C64::new(h, 0.0);
    }
    symmetrize(&mut matrix);
    Ok(RingHamiltonian {
        n_qubits: n,
        matrix,
        descriptor: ModelDescriptor::Xy { gamma, h },
    })
}

/// Transverse-field Ising ring `H = -sum_j X_j X_{j+1} - h sum_j Z_j`.
pub fn tfi_hamiltonian(n: usize, h: f64) -> Result<RingHamiltonian> {
    let mut ham = xy_matrix(n, 1.0, h)?;
    ham.descriptor = ModelDescriptor::Tfi { h };
    Ok(ham)
}

/// Hermitian 4x4 bond term with spectral norm one, drawn from a Hermitized
/// complex Gaussian.
pub fn random_bond_term(seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMatrix::from_fn(4, 4, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let mut herm = (&g + g.adjoint()) * C64::new(0.5, 0.0);
    symmetrize(&mut herm);
    let norm = eigh(&herm).0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    herm / C64::new(norm, 0.0)
}

/// `H = sum_i h_{i,i+1}` with one random bond term repeated around the ring.
pub fn random_two_local_ti(n: usize, seed: u64) -> Result<RingHamiltonian> {
    check_ring(n)?;
    let term = random_bond_term(seed);
    let d = 1 << n;
    let rest = 1 << (n - 2);
    // Term on qubits (0, 1), then translate by cyclic shifts.
    let base = kron(&term, &CMatrix::identity(rest, rest));
    let mut matrix = CMatrix::zeros(d, d);
    for j in 0..n {
        let shift = |i: usize| rotate_bits(i, n, j);
        matrix += CMatrix::from_fn(d, d, |r, c| base[(shift(r), shift(c))]);
    }
    symmetrize(&mut matrix);
    Ok(RingHamiltonian {
        n_qubits: n,
        matrix,
        descriptor: ModelDescriptor::Random { seed },
    })
}

/// Basis index with qubit `q` moved to qubit `(q - by) mod n`, so that an
/// operator on qubits `(0, 1)` lands on `(by, by + 1)`.
fn rotate_bits(i: usize, n: usize, by: usize) -> usize {
    let by = by % n;
    let mask = (1 << n) - 1;
    // Qubit q is bit n-1-q; moving qubit q+by to q is a left rotation by `by`.
    ((i << by) | (i >> (n - by))) & mask
}

/// Cyclic shift permutation `|b_0 ... b_{n-1}> -> |b_{n-1} b_0 ...>` as a matrix.
pub fn shift_operator(n: usize) -> CMatrix {
    let d = 1 << n;
    CMatrix::from_fn(d, d, |r, c| {
        C64::new(if rotate_bits(r, n, 1) == c { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Thermal state at inverse temperature `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsTarget {
    pub beta: f64,
    pub state: DensityMatrix,
}

/// `exp(-beta H) / Z`, evaluated spectrally with the ground energy shifted to zero.
pub fn gibbs_state(ham: &RingHamiltonian, beta: f64) -> Result<GibbsTarget> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be finite and >= 0")));
    }
    let (values, vectors) = eigh(&ham.matrix);
    let e_min = values[0];
    let z: f64 = values.iter().map(|&e| (-beta * (e - e_min)).exp()).sum();
    let mut data = spectral_map(&values, &vectors, |e| (-beta * (e - e_min)).exp() / z);
    symmetrize(&mut data);
    Ok(GibbsTarget {
        beta,
        state: DensityMatrix::from_matrix_unchecked(ham.n_qubits, data),
    })
}
