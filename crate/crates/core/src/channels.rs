//! Gate and channel primitives: local unitaries, the probabilistic reset
//! gate, the noise channels and the 15-angle two-qubit gate.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Program, SU4_ANGLES};
use crate::error::{Error, Result};
use crate::kernels::{self, Mat2};
use crate::qstate::{kron, CMatrix, CVector, DensityMatrix, PureState};

const UNITARY_TOL: f64 = 1e-10;

/// Rotation axis of an elementary single-qubit rotation `exp(-i a P / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub(crate) fn index(self) -> u8 {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

pub(crate) fn rotation(axis: Axis, angle: f64) -> Mat2 {
    let (s, c) = (angle / 2.0).sin_cos();
    let zero = C64::new(0.0, 0.0);
    match axis {
        Axis::X => [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]],
        Axis::Y => [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]],
        Axis::Z => [[C64::new(c, -s), zero], [zero, C64::new(c, s)]],
    }
}

pub(crate) fn mat2_to_matrix(u: &Mat2) -> CMatrix {
    CMatrix::from_fn(2, 2, |r, c| u[r][c])
}

pub(crate) fn mat2_adjoint(u: &Mat2) -> Mat2 {
    [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]]
}

/// Single-qubit rotation matrix `exp(-i angle P / 2)`.
pub fn rotation_matrix(axis: Axis, angle: f64) -> CMatrix {
    mat2_to_matrix(&rotation(axis, angle))
}

pub fn pauli(axis: Axis) -> CMatrix {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match axis {
        Axis::X => CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        Axis::Y => CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        Axis::Z => CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

pub fn hadamard() -> CMatrix {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}

/// Point on the Bloch sphere: polar angle `theta` in `[0, pi]`, azimuth
/// `varphi` in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles {
    theta: f64,
    varphi: f64,
}

impl BlochAngles {
    /// Reduce arbitrary angles onto the canonical chart of the sphere.
    pub fn new(theta: f64, varphi: f64) -> Self {
        let mut theta = theta.rem_euclid(2.0 * PI);
        let mut varphi = varphi;
        if theta > PI {
            // Reflect through the pole: (theta, phi) ~ (2pi - theta, phi + pi).
            theta = 2.0 * PI - theta;
            varphi += PI;
        }
        Self {
            theta,
            varphi: wrap_half_open(varphi),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn varphi(&self) -> f64 {
        self.varphi
    }

    /// Unit Bloch vector `(sin t cos f, sin t sin f, cos t)`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sf, cf) = self.varphi.sin_cos();
        [st * cf, st * sf, ct]
    }

    /// Angles of a non-zero Bloch vector's direction.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero Bloch vector has no direction".into()));
        }
        let theta = (v[2] / norm).clamp(-1.0, 1.0).acos();
        Ok(Self::new(theta, v[1].atan2(v[0])))
    }
}

/// Map onto `[-pi, pi)`.
fn wrap_half_open(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

/// Amplitudes `(cos(t/2), e^{i f} sin(t/2))` for raw, unreduced angles.
pub(crate) fn bloch_amplitudes(theta: f64, varphi: f64) -> [C64; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [C64::new(c, 0.0), C64::from_polar(s, varphi)]
}

pub fn bloch_pure_state(angles: BlochAngles) -> PureState {
    let amps = bloch_amplitudes(angles.theta, angles.varphi);
    PureState::from_raw(1, CVector::from_vec(amps.to_vec()))
}

/// Parameters of the probabilistic reset gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetGateParams {
    pub p: f64,
    pub target: BlochAngles,
}

/// 15 angles of a general two-qubit gate, in application order:
/// `[B1 (3), B2 (3), alpha, beta, gamma, A1 (3), A2 (3)]`, where each local
/// triple `(a, b, c)` is the factor `Rz(a) Ry(b) Rz(c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su4Params {
    pub angles: [f64; SU4_ANGLES],
}

impl Su4Params {
    pub fn identity() -> Self {
        Self {
            angles: [0.0; SU4_ANGLES],
        }
    }

    pub fn from_slice(angles: &[f64]) -> Result<Self> {
        let angles = angles.try_into().map_err(|_| Error::ParameterMismatch {
            expected: SU4_ANGLES,
            got: angles.len(),
        })?;
        Ok(Self { angles })
    }
}

/// Local noise attached to every CX, plus the cap on reset probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Per-qubit dephasing rates.
    pub lambda: Vec<f64>,
    /// Per-qubit amplitude damping rates.
    pub omega: Vec<f64>,
    pub p_star: f64,
    pub enabled: bool,
}

pub const DEFAULT_P_STAR: f64 = 0.99;

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            lambda: Vec::new(),
            omega: Vec::new(),
            p_star: 1.0,
            enabled: false,
        }
    }

    pub fn new(lambda: Vec<f64>, omega: Vec<f64>, p_star: f64) -> Result<Self> {
        let model = Self {
            lambda,
            omega,
            p_star,
            enabled: true,
        };
        model.validate()?;
        Ok(model)
    }

    /// Same rate on every qubit.
    pub fn uniform(n_qubits: usize, lambda: f64, omega: f64, p_star: f64) -> Result<Self> {
        Self::new(vec![lambda; n_qubits], vec![omega; n_qubits], p_star)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.len() != self.omega.len() {
            return Err(Error::DimensionMismatch {
                left: self.lambda.len(),
                right: self.omega.len(),
            });
        }
        for &l in &self.lambda {
            check_rate("lambda", l)?;
        }
        for &w in &self.omega {
            check_rate("omega", w)?;
        }
        if !(self.p_star > 0.0 && self.p_star <= 1.0) {
            return Err(Error::InvalidArgument(format!("p_star = {} not in (0, 1]", self.p_star)));
        }
        Ok(())
    }

    /// Upper bound on reset probabilities seen by the circuit.
    pub fn p_cap(&self) -> f64 {
        if self.enabled {
            self.p_star
        } else {
            1.0
        }
    }

    pub(crate) fn check_qubits(&self, n_qubits: usize) -> Result<()> {
        if self.enabled && self.lambda.len() != n_qubits {
            return Err(Error::DimensionMismatch {
                left: self.lambda.len(),
                right: n_qubits,
            });
        }
        Ok(())
    }
}

fn check_rate(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::RateOutOfRange { name, value });
    }
    Ok(())
}

fn check_qubit(rho: &DensityMatrix, q: usize) -> Result<()> {
    if q >= rho.n_qubits() {
        return Err(Error::QubitOutOfRange {
            index: q,
            n_qubits: rho.n_qubits(),
        });
    }
    Ok(())
}

fn unitarity_error(u: &CMatrix) -> f64 {
    let prod = u.adjoint() * u;
    (prod - CMatrix::identity(u.nrows(), u.ncols()))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Conjugate `rho` by `u` acting on `targets` (first target = most
/// significant bit of `u`'s index).
pub fn apply_local_unitary(rho: &DensityMatrix, u: &CMatrix, targets: &[usize]) -> Result<DensityMatrix> {
    let k = targets.len();
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidTargets(format!("expected 1 or 2 targets, got {k}")));
    }
    if u.nrows() != 1 << k || !u.is_square() {
        return Err(Error::DimensionMismatch {
            left: u.nrows(),
            right: 1 << k,
        });
    }
    for &t in targets {
        check_qubit(rho, t)?;
    }
    if k == 2 && targets[0] == targets[1] {
        return Err(Error::InvalidTargets("targets must be distinct".into()));
    }
    let dev = unitarity_error(u);
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary { deviation: dev });
    }
    let n = rho.n_qubits();
    let masks: Vec<usize> = targets.iter().map(|&t| kernels::mask_of(n, t)).collect();
    let full = embed(u, &masks, rho.dim());
    let data = &full * rho.matrix() * full.adjoint();
    Ok(DensityMatrix::from_matrix_unchecked(n, data))
}

/// Embed a `2^k`-dimensional operator on the qubits with `masks` into the full space.
fn embed(u: &CMatrix, masks: &[usize], d: usize) -> CMatrix {
    let all: usize = masks.iter().sum();
    let local = |i: usize| -> usize {
        masks.iter().fold(0, |acc, &m| (acc << 1) | usize::from(i & m != 0))
    };
    CMatrix::from_fn(d, d, |r, c| {
        if r & !all != c & !all {
            C64::new(0.0, 0.0)
        } else {
            u[(local(r), local(c))]
        }
    })
}

/// `(1-p) rho + p |phi><phi|_i (x) Tr_i(rho)`.
pub fn reset_channel(rho: &DensityMatrix, i: usize, gate: &ResetGateParams) -> Result<DensityMatrix> {
    check_qubit(rho, i)?;
    check_rate("p", gate.p)?;
    let mut out = rho.clone();
    let d = out.dim();
    let phi = bloch_amplitudes(gate.target.theta, gate.target.varphi);
    kernels::reset(
        out.matrix_mut().as_mut_slice(),
        d,
        kernels::mask_of(rho.n_qubits(), i),
        gate.p,
        &phi,
    );
    Ok(out)
}

/// `(1-l) rho + l Z_j rho Z_j`.
pub fn dephasing_channel(rho: &DensityMatrix, j: usize, lambda: f64) -> Result<DensityMatrix> {
    check_qubit(rho, j)?;
    check_rate("lambda", lambda)?;
    let mut out = rho.clone();
    let d = out.dim();
    kernels::scale_coherences(
        out.matrix_mut().as_mut_slice(),
        d,
        kernels::mask_of(rho.n_qubits(), j),
        1.0 - 2.0 * lambda,
    );
    Ok(out)
}

/// Kraus pair `K0 = diag(1, sqrt(1-w))`, `K1 = sqrt(w) |0><1|` on qubit `j`.
pub fn amplitude_damping_channel(rho: &DensityMatrix, j: usize, omega: f64) -> Result<DensityMatrix> {
    check_qubit(rho, j)?;
    check_rate("omega", omega)?;
    let mut out = rho.clone();
    let d = out.dim();
    kernels::amp_damp(out.matrix_mut().as_mut_slice(), d, kernels::mask_of(rho.n_qubits(), j), omega);
    Ok(out)
}

/// Single-qubit depolarizing channel `(1-l) rho + l Tr(rho) I/2`.
pub fn depolarizing_channel(rho: &DensityMatrix, lambda: f64) -> Result<DensityMatrix> {
    if rho.n_qubits() != 1 {
        return Err(Error::InvalidArgument(format!(
            "depolarizing channel acts on one qubit, got {}",
            rho.n_qubits()
        )));
    }
    check_rate("lambda", lambda)?;
    let half = CMatrix::identity(2, 2) * C64::new(0.5 * rho.trace(), 0.0);
    let data = rho.matrix() * C64::new(1.0 - lambda, 0.0) + half * C64::new(lambda, 0.0);
    Ok(DensityMatrix::from_matrix_unchecked(1, data))
}

fn euler_local(a: f64, b: f64, c: f64) -> CMatrix {
    rotation_matrix(Axis::Z, a) * rotation_matrix(Axis::Y, b) * rotation_matrix(Axis::Z, c)
}

/// `exp(i (alpha XX + beta YY + gamma ZZ))`.
pub fn entangling_core(alpha: f64, beta: f64, gamma: f64) -> CMatrix {
    let id = CMatrix::identity(4, 4);
    let factor = |theta: f64, axis: Axis| {
        let p = pauli(axis);
        let pp = kron(&p, &p);
        &id * C64::new(theta.cos(), 0.0) + pp * C64::new(0.0, theta.sin())
    };
    factor(alpha, Axis::X) * factor(beta, Axis::Y) * factor(gamma, Axis::Z)
}

/// `(A1 (x) A2) N(alpha, beta, gamma) (B1 (x) B2)`.
pub fn su4_matrix(params: &Su4Params) -> CMatrix {
    let a = &params.angles;
    let before = kron(&euler_local(a[0], a[1], a[2]), &euler_local(a[3], a[4], a[5]));
    let core = entangling_core(a[6], a[7], a[8]);
    let after = kron(&euler_local(a[9], a[10], a[11]), &euler_local(a[12], a[13], a[14]));
    after * core * before
}

/// Apply the two-qubit gate on ring neighbours `(j, k)` through its three-CX
/// realization, inserting the pair's noise after every CX when `noise` is
/// enabled.
pub fn apply_su4_noisy(
    rho: &DensityMatrix,
    params: &Su4Params,
    qubits: (usize, usize),
    noise: &NoiseModel,
) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    let (j, k) = qubits;
    check_qubit(rho, j)?;
    check_qubit(rho, k)?;
    if j == k || (j + 1) % n != k && (k + 1) % n != j {
        return Err(Error::NonAdjacentPair(j, k));
    }
    noise.check_qubits(n)?;
    let mut program = Program::new(n, SU4_ANGLES);
    program.push_su4((j, k), 0, noise);
    let mut out = rho.clone();
    program.forward(&params.angles, out.matrix_mut());
    Ok(out)
}

/// Fixed angles used by the three-CX circuit around the entangling core.
pub(crate) const KAK_PRE_RZ: f64 = FRAC_PI_2;
pub(crate) const KAK_POST_RZ: f64 = -FRAC_PI_2;
