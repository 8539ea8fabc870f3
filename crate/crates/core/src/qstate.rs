//! Dense density matrices and pure states, with partial traces, spectral
//! functions and distance measures.
//!
//! Qubit 0 is the most significant bit of the computational-basis index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::kernels;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Maximum anti-Hermitian part accepted on construction.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Maximum deviation of the trace from one accepted on construction.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[-PSD_FLOOR, 0)` are treated as roundoff and clipped.
pub const PSD_FLOOR: f64 = 1e-9;

/// Tensor product `a (x) b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Maximum elementwise deviation `|a - a^dagger|`.
pub fn hermiticity_error(a: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for c in 0..a.ncols() {
        for r in 0..=c {
            worst = worst.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues in ascending order.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(a.nrows(), a.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// `V diag(f(e)) V^dagger`.
pub(crate) fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, c)] * f(values[c])
    });
    scaled * vectors.adjoint()
}

fn clip_spectrum(values: &mut [f64]) -> Result<()> {
    for v in values.iter_mut() {
        if *v < -PSD_FLOOR {
            return Err(Error::NegativeEigenvalue { value: *v });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn psd_sqrt(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            left: a.nrows(),
            right: a.ncols(),
        });
    }
    let dev = hermiticity_error(a);
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let (mut values, vectors) = eigh(a);
    clip_spectrum(&mut values)?;
    Ok(spectral_map(&values, &vectors, f64::sqrt))
}

fn n_qubits_for_dim(dim: usize) -> Option<usize> {
    (dim >= 2 && dim.is_power_of_two()).then(|| dim.trailing_zeros() as usize)
}

/// A normalized state vector on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: CVector,
}

impl PureState {
    /// Build from amplitudes; the vector must already have unit norm.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let n_qubits = n_qubits_for_dim(amplitudes.len())
            .ok_or_else(|| Error::InvalidState(format!("length {} is not 2^n", amplitudes.len())))?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("norm {norm} != 1")));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Build from arbitrary non-zero amplitudes, rescaling to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(amplitudes / C64::new(norm, 0.0))
    }

    /// Computational-basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = CVector::zeros(1 << n_qubits);
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { n_qubits, amplitudes }
    }

    pub(crate) fn from_raw(n_qubits: usize, amplitudes: CVector) -> Self {
        Self { n_qubits, amplitudes }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> DensityMatrix {
        let data = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_matrix_unchecked(self.n_qubits, data)
    }
}

/// A `2^n x 2^n` Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: CMatrix,
}

impl DensityMatrix {
    /// Validate and wrap a matrix.
    pub fn new(data: CMatrix) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch {
                left: data.nrows(),
                right: data.ncols(),
            });
        }
        let n_qubits = n_qubits_for_dim(data.nrows())
            .ok_or_else(|| Error::InvalidState(format!("dimension {} is not 2^n", data.nrows())))?;
        let rho = Self { n_qubits, data };
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(n_qubits: usize, data: CMatrix) -> Self {
        debug_assert_eq!(data.nrows(), 1 << n_qubits);
        Self { n_qubits, data }
    }

    /// `|0...0><0...0|`.
    pub fn zero_state(n_qubits: usize) -> Self {
        PureState::basis(n_qubits, 0).projector()
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self {
            n_qubits,
            data: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        }
    }

    /// Diagonal state from non-negative weights summing to one.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let data = CMatrix::from_diagonal(&CVector::from_iterator(
            weights.len(),
            weights.iter().map(|&w| C64::new(w, 0.0)),
        ));
        Self::new(data)
    }

    /// Check the Hermitian / trace / PSD invariants.
    pub fn validate(&self) -> Result<()> {
        let dev = hermiticity_error(&self.data);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min = self.eigenvalues()[0];
        if min < -PSD_FLOOR {
            return Err(Error::NegativeEigenvalue { value: min });
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    /// `Tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.data).0
    }

    /// Largest elementwise difference to another operator of the same size.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.data - &other.data).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check_qubit(&self, i: usize) -> Result<()> {
        if i >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: i,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    pub(crate) fn check_same_dim(&self, other: &DensityMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

/// Trace out qubit `i`, returning the reduced state on the remaining qubits
/// in their original order.
pub fn partial_trace_qubit(rho: &DensityMatrix, i: usize) -> Result<DensityMatrix> {
    rho.check_qubit(i)?;
    if rho.n_qubits == 1 {
        return Err(Error::InvalidArgument("cannot trace out the only qubit".into()));
    }
    let n = rho.n_qubits;
    let mask = kernels::mask_of(n, i);
    let low = mask - 1;
    // Insert a zero bit at the traced position.
    let expand = |k: usize| ((k & !low) << 1) | (k & low);
    let d_out = rho.dim() / 2;
    let data = CMatrix::from_fn(d_out, d_out, |r, c| {
        let (r0, c0) = (expand(r), expand(c));
        rho.data[(r0, c0)] + rho.data[(r0 | mask, c0 | mask)]
    });
    Ok(DensityMatrix::from_matrix_unchecked(n - 1, data))
}

/// Uhlmann fidelity `[Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2`, clamped to `[0, 1]`.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.check_same_dim(sigma)?;
    let sqrt_rho = psd_sqrt(&rho.data)?;
    fidelity_with_sqrt(&sqrt_rho, &sigma.data)
}

/// Fidelity when `sqrt(rho)` has already been computed.
pub(crate) fn fidelity_with_sqrt(sqrt_rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let mut inner = sqrt_rho * sigma * sqrt_rho;
    symmetrize(&mut inner);
    let (values, _) = eigh(&inner);
    let root_trace: f64 = values.iter().map(|&v| v.max(0.0).sqrt()).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// Trace norm `||rho - sigma||_1` (no 1/2 prefactor).
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    rho.check_same_dim(sigma)?;
    let mut diff = &rho.data - &sigma.data;
    symmetrize(&mut diff);
    Ok(eigh(&diff).0.iter().map(|v| v.abs()).sum())
}

/// Replace `a` by its Hermitian part.
pub(crate) fn symmetrize(a: &mut CMatrix) {
    let d = a.nrows();
    for c in 0..d {
        for r in 0..c {
            let avg = (a[(r, c)] + a[(c, r)].conj()) * 0.5;
            a[(r, c)] = avg;
            a[(c, r)] = avg.conj();
        }
        a[(c, c)] = C64::new(a[(c, c)].re, 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn mat(rows: &[&[f64]]) -> CMatrix {
        CMatrix::from_fn(rows.len(), rows[0].len(), |r, c| re(rows[r][c]))
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn kron_identity_and_diagonal() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2), CMatrix::identity(4, 4));
        let z = mat(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let zz = kron(&z, &z);
        let expect = mat(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, -1.0, 0.0, 0.0],
            &[0.0, 0.0, -1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        assert_eq!(zz, expect);
    }

    #[test]
    fn kron_x_with_projector() {
        let x = mat(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let p0 = mat(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let k = kron(&x, &p0);
        for r in 0..4 {
            for c in 0..4 {
                let want = if (r, c) == (0, 2) || (r, c) == (2, 0) { 1.0 } else { 0.0 };
                assert_eq!(k[(r, c)], re(want));
            }
        }
    }

    #[test]
    fn partial_trace_examples() {
        let rho = DensityMatrix::zero_state(2);
        let reduced = partial_trace_qubit(&rho, 1).unwrap();
        assert_eq!(reduced, DensityMatrix::zero_state(1));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = PureState::new(CVector::from_vec(vec![re(s), re(0.0), re(0.0), re(s)])).unwrap();
        let reduced = partial_trace_qubit(&bell.projector(), 1).unwrap();
        assert!(close(reduced.matrix(), &(CMatrix::identity(2, 2) * re(0.5)), 1e-15));

        let diag = DensityMatrix::diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let reduced = partial_trace_qubit(&diag, 0).unwrap();
        assert!(close(reduced.matrix(), &mat(&[&[0.4, 0.0], &[0.0, 0.6]]), 1e-15));
    }

    #[test]
    fn partial_trace_rejects_bad_index() {
        let rho = DensityMatrix::zero_state(2);
        assert!(matches!(
            partial_trace_qubit(&rho, 2),
            Err(Error::QubitOutOfRange { index: 2, n_qubits: 2 })
        ));
    }

    #[test]
    fn psd_sqrt_examples() {
        let a = mat(&[&[4.0, 0.0], &[0.0, 9.0]]);
        assert!(close(&psd_sqrt(&a).unwrap(), &mat(&[&[2.0, 0.0], &[0.0, 3.0]]), 1e-12));
        let i = CMatrix::identity(4, 4);
        assert!(close(&psd_sqrt(&i).unwrap(), &i, 1e-12));
        let proj = mat(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(close(&psd_sqrt(&proj).unwrap(), &proj, 1e-8));
    }

    #[test]
    fn psd_sqrt_rejects_non_hermitian_and_negative() {
        let a = mat(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(psd_sqrt(&a), Err(Error::NotHermitian { .. })));
        let neg = mat(&[&[1.0, 0.0], &[0.0, -0.1]]);
        assert!(matches!(psd_sqrt(&neg), Err(Error::NegativeEigenvalue { .. })));
        let tiny = mat(&[&[1.0, 0.0], &[0.0, -1e-12]]);
        assert!(psd_sqrt(&tiny).is_ok());
    }

    #[test]
    fn fidelity_examples() {
        let zero = DensityMatrix::zero_state(1);
        let one = PureState::basis(1, 1).projector();
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!((uhlmann_fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-12);
        assert!(uhlmann_fidelity(&zero, &one).unwrap() < 1e-12);
        assert!((uhlmann_fidelity(&mixed, &zero).unwrap() - 0.5).abs() < 1e-12);
        assert!((uhlmann_fidelity(&zero, &mixed).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            uhlmann_fidelity(&zero, &DensityMatrix::zero_state(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn trace_distance_examples() {
        let zero = DensityMatrix::zero_state(1);
        let one = PureState::basis(1, 1).projector();
        assert!(trace_distance(&zero, &zero).unwrap() < 1e-15);
        assert!((trace_distance(&zero, &one).unwrap() - 2.0).abs() < 1e-12);

        // Bloch radii 0.8 and 0.72 along +z.
        let a = DensityMatrix::diagonal(&[0.9, 0.1]).unwrap();
        let b = DensityMatrix::diagonal(&[0.86, 0.14]).unwrap();
        assert!((trace_distance(&a, &b).unwrap() - 0.08).abs() < 1e-12);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(mat(&[&[0.5, 0.0], &[0.0, 0.4]])).is_err());
        assert!(DensityMatrix::new(mat(&[&[1.2, 0.0], &[0.0, -0.2]])).is_err());
        assert!(DensityMatrix::new(mat(&[&[0.5, 0.1], &[0.0, 0.5]])).is_err());
        assert!(DensityMatrix::new(mat(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]])).is_err());
    }
}
