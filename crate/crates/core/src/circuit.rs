//! Flat primitive-operation programs compiled from an ansatz layout.
//!
//! Every gate is lowered to elementary rotations, CX permutations, noise
//! channels and resets. The same program drives the density-matrix
//! simulator, the reverse-mode gradient and the trajectory sampler.

use num_complex::Complex64 as C64;

use crate::channels::{self, bloch_amplitudes, Axis, NoiseModel, KAK_POST_RZ, KAK_PRE_RZ};
use crate::kernels::{self, Mat2};
use crate::qstate::CMatrix;

pub const SU4_ANGLES: usize = 15;
pub const RESET_PARAMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Angle {
    Fixed(f64),
    /// `scale * params[index] + offset`
    Param { index: usize, scale: f64, offset: f64 },
}

impl Angle {
    fn param(index: usize) -> Self {
        Angle::Param {
            index,
            scale: 1.0,
            offset: 0.0,
        }
    }

    #[inline]
    pub(crate) fn value(&self, params: &[f64]) -> f64 {
        match *self {
            Angle::Fixed(a) => a,
            Angle::Param { index, scale, offset } => scale * params[index] + offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Op {
    Rot { mask: usize, axis: Axis, angle: Angle },
    Cx { control: usize, target: usize },
    Dephase { mask: usize, lambda: f64 },
    AmpDamp { mask: usize, omega: f64 },
    /// Parameters at `offset`: probability, polar angle, azimuth.
    Reset { mask: usize, offset: usize, cap: f64 },
}

impl Op {
    fn is_unitary(&self) -> bool {
        matches!(self, Op::Rot { .. } | Op::Cx { .. })
    }
}

/// Probability of a reset gate after clamping into `[0, cap]`.
#[inline]
pub(crate) fn effective_p(params: &[f64], offset: usize, cap: f64) -> f64 {
    params[offset].clamp(0.0, cap)
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Program {
    n_qubits: usize,
    n_params: usize,
    ops: Vec<Op>,
}

impl Program {
    pub(crate) fn new(n_qubits: usize, n_params: usize) -> Self {
        Self {
            n_qubits,
            n_params,
            ops: Vec::new(),
        }
    }

    pub(crate) fn ops(&self) -> &[Op] {
        &self.ops
    }

    fn mask(&self, q: usize) -> usize {
        kernels::mask_of(self.n_qubits, q)
    }

    fn push_euler(&mut self, q: usize, offset: usize) {
        // Rz(a) Ry(b) Rz(c): c acts first.
        let mask = self.mask(q);
        for (axis, slot) in [(Axis::Z, 2), (Axis::Y, 1), (Axis::Z, 0)] {
            self.ops.push(Op::Rot {
                mask,
                axis,
                angle: Angle::param(offset + slot),
            });
        }
    }

    fn push_noise(&mut self, qubits: [usize; 2], noise: &NoiseModel) {
        if !noise.enabled {
            return;
        }
        for q in qubits {
            let mask = self.mask(q);
            self.ops.push(Op::Dephase {
                mask,
                lambda: noise.lambda[q],
            });
            self.ops.push(Op::AmpDamp {
                mask,
                omega: noise.omega[q],
            });
        }
    }

    /// General two-qubit gate on `(j, k)` with its 15 angles at `offset`,
    /// lowered to the three-CX circuit
    /// `CX(k->j) . Rz(pi/2 - 2g)_j Ry(pi/2 - 2a)_k . CX(j->k) . Ry(2b - pi/2)_k . CX(k->j)`
    /// framed by fixed `Rz(+-pi/2)` and the four Euler locals.
    pub(crate) fn push_su4(&mut self, (j, k): (usize, usize), offset: usize, noise: &NoiseModel) {
        let (mj, mk) = (self.mask(j), self.mask(k));
        let alpha = offset + 6;
        let beta = offset + 7;
        let gamma = offset + 8;
        let cx_kj = Op::Cx { control: mk, target: mj };
        let cx_jk = Op::Cx { control: mj, target: mk };

        self.push_euler(j, offset);
        self.push_euler(k, offset + 3);
        self.ops.push(Op::Rot {
            mask: mk,
            axis: Axis::Z,
            angle: Angle::Fixed(KAK_PRE_RZ),
        });
        self.ops.push(cx_kj.clone());
        self.push_noise([j, k], noise);
        self.ops.push(Op::Rot {
            mask: mj,
            axis: Axis::Z,
            angle: Angle::Param {
                index: gamma,
                scale: -2.0,
                offset: std::f64::consts::FRAC_PI_2,
            },
        });
        self.ops.push(Op::Rot {
            mask: mk,
            axis: Axis::Y,
            angle: Angle::Param {
                index: alpha,
                scale: -2.0,
                offset: std::f64::consts::FRAC_PI_2,
            },
        });
        self.ops.push(cx_jk);
        self.push_noise([j, k], noise);
        self.ops.push(Op::Rot {
            mask: mk,
            axis: Axis::Y,
            angle: Angle::Param {
                index: beta,
                scale: 2.0,
                offset: -std::f64::consts::FRAC_PI_2,
            },
        });
        self.ops.push(cx_kj);
        self.push_noise([j, k], noise);
        self.ops.push(Op::Rot {
            mask: mj,
            axis: Axis::Z,
            angle: Angle::Fixed(KAK_POST_RZ),
        });
        self.push_euler(j, offset + 9);
        self.push_euler(k, offset + 12);
    }

    pub(crate) fn push_reset(&mut self, q: usize, offset: usize, cap: f64) {
        let mask = self.mask(q);
        self.ops.push(Op::Reset { mask, offset, cap });
    }

    fn apply(&self, op: &Op, params: &[f64], m: &mut [C64], d: usize) {
        match *op {
            Op::Rot { mask, axis, angle } => {
                kernels::conj_1q(m, d, mask, &channels::rotation(axis, angle.value(params)));
            }
            Op::Cx { control, target } => kernels::conj_cx(m, d, control, target),
            Op::Dephase { mask, lambda } => kernels::scale_coherences(m, d, mask, 1.0 - 2.0 * lambda),
            Op::AmpDamp { mask, omega } => kernels::amp_damp(m, d, mask, omega),
            Op::Reset { mask, offset, cap } => {
                let p = effective_p(params, offset, cap);
                let phi = bloch_amplitudes(params[offset + 1], params[offset + 2]);
                kernels::reset(m, d, mask, p, &phi);
            }
        }
    }

    /// Evolve `rho` in place.
    pub(crate) fn forward(&self, params: &[f64], rho: &mut CMatrix) {
        debug_assert_eq!(params.len(), self.n_params);
        let d = rho.nrows();
        let m = rho.as_mut_slice();
        for op in &self.ops {
            self.apply(op, params, m, d);
        }
    }

    /// Evolve `rho` in place, keeping the input of every non-unitary op.
    pub(crate) fn forward_taped(&self, params: &[f64], rho: &mut CMatrix) -> Tape {
        let d = rho.nrows();
        let m = rho.as_mut_slice();
        let mut checkpoints = Vec::new();
        for op in &self.ops {
            if !op.is_unitary() {
                checkpoints.extend_from_slice(m);
            }
            self.apply(op, params, m, d);
        }
        Tape { checkpoints }
    }

    /// Reverse pass. `output` is the final state from [`Program::forward_taped`]
    /// (consumed), `adjoint` the loss derivative `dL/drho` at the output, so
    /// that `dL = Re Tr(adjoint . d rho)`.
    pub(crate) fn backward(&self, params: &[f64], mut tape: Tape, mut output: CMatrix, mut adjoint: CMatrix) -> Vec<f64> {
        let d = output.nrows();
        let d2 = d * d;
        let rho = output.as_mut_slice();
        let lam = adjoint.as_mut_slice();
        let mut grad = vec![0.0; self.n_params];

        for op in self.ops.iter().rev() {
            match *op {
                Op::Rot { mask, axis, angle } => {
                    if let Angle::Param { index, scale, .. } = angle {
                        grad[index] += scale * kernels::trace_with_pauli(lam, rho, d, mask, axis.index()).im;
                    }
                    let undo = channels::mat2_adjoint(&channels::rotation(axis, angle.value(params)));
                    kernels::conj_1q(rho, d, mask, &undo);
                    kernels::conj_1q(lam, d, mask, &undo);
                }
                Op::Cx { control, target } => {
                    kernels::conj_cx(rho, d, control, target);
                    kernels::conj_cx(lam, d, control, target);
                }
                Op::Dephase { mask, lambda } => {
                    tape.restore(rho, d2);
                    kernels::scale_coherences(lam, d, mask, 1.0 - 2.0 * lambda);
                }
                Op::AmpDamp { mask, omega } => {
                    tape.restore(rho, d2);
                    kernels::amp_damp_dual(lam, d, mask, omega);
                }
                Op::Reset { mask, offset, cap } => {
                    tape.restore(rho, d2);
                    let p = effective_p(params, offset, cap);
                    let (theta, varphi) = (params[offset + 1], params[offset + 2]);
                    let phi = bloch_amplitudes(theta, varphi);
                    let contraction = kernels::reset_contraction(lam, rho, d, mask);
                    let pair = |q: &Mat2| -> f64 {
                        let mut acc = C64::new(0.0, 0.0);
                        for a in 0..2 {
                            for b in 0..2 {
                                acc += contraction[a][b] * q[b][a];
                            }
                        }
                        acc.re
                    };
                    let raw = params[offset];
                    // Outside the box the clamp is flat; on the boundary the
                    // one-sided derivative pointing inward is the affine slope.
                    if (0.0..=cap).contains(&raw) {
                        let keep = kernels::trace_product(lam, rho, d).re;
                        grad[offset] += pair(&kernels::projector(&phi)) - keep;
                    }
                    let (dtheta, dvarphi) = projector_derivatives(theta, varphi);
                    grad[offset + 1] += p * pair(&dtheta);
                    grad[offset + 2] += p * pair(&dvarphi);
                    kernels::reset_dual(lam, d, mask, p, &phi);
                }
            }
        }
        grad
    }

    /// Unitary of a noiseless, reset-free program.
    #[cfg(test)]
    pub(crate) fn unitary(&self, params: &[f64]) -> CMatrix {
        let d = 1 << self.n_qubits;
        let mut u = CMatrix::identity(d, d);
        for op in &self.ops {
            match *op {
                Op::Rot { mask, axis, angle } => {
                    kernels::left_1q(u.as_mut_slice(), d, mask, &channels::rotation(axis, angle.value(params)))
                }
                Op::Cx { control, target } => {
                    for col in u.as_mut_slice().chunks_exact_mut(d) {
                        kernels::cx_vec(col, control, target);
                    }
                }
                _ => panic!("program is not unitary"),
            }
        }
        u
    }
}

/// Derivatives of `|phi><phi|` with respect to the polar and azimuthal angles.
fn projector_derivatives(theta: f64, varphi: f64) -> (Mat2, Mat2) {
    let (st, ct) = theta.sin_cos();
    let e = C64::from_polar(1.0, varphi);
    let half = 0.5;
    let dtheta = [
        [C64::new(-half * st, 0.0), e.conj() * (half * ct)],
        [e * (half * ct), C64::new(half * st, 0.0)],
    ];
    let i = C64::new(0.0, 1.0);
    let dvarphi = [
        [C64::new(0.0, 0.0), -i * e.conj() * (half * st)],
        [i * e * (half * st), C64::new(0.0, 0.0)],
    ];
    (dtheta, dvarphi)
}

/// States saved ahead of non-unitary ops during a taped forward pass.
pub(crate) struct Tape {
    checkpoints: Vec<C64>,
}

impl Tape {
    fn restore(&mut self, into: &mut [C64], d2: usize) {
        let start = self.checkpoints.len() - d2;
        into.copy_from_slice(&self.checkpoints[start..]);
        self.checkpoints.truncate(start);
    }
}
