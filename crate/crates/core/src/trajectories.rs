//! Monte Carlo unraveling of the dissipative circuit into pure-state
//! instances: every reset gate either does nothing or measures and
//! re-prepares its qubit, and (optionally) every noise channel fires one
//! Kraus operator. Averaging instances recovers the density-matrix evolution.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ansatz::{AnsatzLayout, ParameterVector};
use crate::channels::{self, bloch_amplitudes, NoiseModel};
use crate::circuit::{effective_p, Op, Program};
use crate::error::{Error, Result};
use crate::kernels;
use crate::qstate::{CMatrix, CVector, DensityMatrix, PureState};

/// Most reset slots accepted by exhaustive branch enumeration.
pub const MAX_ENUMERATED_RESETS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// One entry per reset slot: `true` when the reset branch fired.
    pub branches: Vec<bool>,
    /// Measurement outcome of every fired reset, in circuit order.
    pub outcomes: Vec<u8>,
    /// Kraus index of every noise event, in circuit order (noisy mode only).
    pub kraus: Vec<u8>,
    /// Probability of every sampled choice, in sampling order.
    pub weights: Vec<f64>,
    pub state: PureState,
}

fn normalize(v: &mut [C64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v {
        *z /= norm;
    }
}

fn prob_one(v: &[C64], mask: usize) -> f64 {
    v.iter()
        .enumerate()
        .filter(|(i, _)| i & mask != 0)
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// Project the masked qubit onto `outcome` and replace it by `phi`.
fn measure_and_prepare(v: &mut [C64], mask: usize, outcome: u8, phi: &[C64; 2]) {
    for i0 in (0..v.len()).filter(|i| i & mask == 0) {
        let i1 = i0 | mask;
        let kept = if outcome == 0 { v[i0] } else { v[i1] };
        v[i0] = phi[0] * kept;
        v[i1] = phi[1] * kept;
    }
    normalize(v);
}

/// Pick index 0 with probability `p0`, recording the weight of the choice.
fn choose(rng: &mut impl Rng, p0: f64, weights: &mut Vec<f64>) -> u8 {
    let pick = if rng.random::<f64>() < p0 { 0 } else { 1 };
    weights.push(if pick == 0 { p0 } else { 1.0 - p0 });
    pick
}

fn run_program(program: &Program, params: &[f64], initial: &PureState, rng: &mut impl Rng) -> TrajectoryRecord {
    let mut v: Vec<C64> = initial.amplitudes().iter().copied().collect();
    let mut rec = TrajectoryRecord {
        branches: Vec::new(),
        outcomes: Vec::new(),
        kraus: Vec::new(),
        weights: Vec::new(),
        state: initial.clone(),
    };
    for op in program.ops() {
        match *op {
            Op::Rot { mask, axis, angle } => {
                kernels::apply_1q_vec(&mut v, mask, &channels::rotation(axis, angle.value(params)))
            }
            Op::Cx { control, target } => kernels::cx_vec(&mut v, control, target),
            Op::Dephase { mask, lambda } => {
                let k = choose(rng, 1.0 - lambda, &mut rec.weights);
                if k == 1 {
                    for (i, z) in v.iter_mut().enumerate() {
                        if i & mask != 0 {
                            *z = -*z;
                        }
                    }
                }
                rec.kraus.push(k);
            }
            Op::AmpDamp { mask, omega } => {
                let decay = omega * prob_one(&v, mask);
                let k = choose(rng, 1.0 - decay, &mut rec.weights);
                if k == 0 {
                    let s = (1.0 - omega).sqrt();
                    for (i, z) in v.iter_mut().enumerate() {
                        if i & mask != 0 {
                            *z *= s;
                        }
                    }
                } else {
                    measure_and_prepare(&mut v, mask, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
                }
                normalize(&mut v);
                rec.kraus.push(k);
            }
            Op::Reset { mask, offset, cap } => {
                let p = effective_p(params, offset, cap);
                let fired = choose(rng, 1.0 - p, &mut rec.weights) == 1;
                rec.branches.push(fired);
                if fired {
                    let outcome = choose(rng, 1.0 - prob_one(&v, mask), &mut rec.weights);
                    let phi = bloch_amplitudes(params[offset + 1], params[offset + 2]);
                    measure_and_prepare(&mut v, mask, outcome, &phi);
                    rec.outcomes.push(outcome);
                }
            }
        }
    }
    rec.state = PureState::from_raw(initial.n_qubits(), CVector::from_vec(v));
    rec
}

fn compile_for(layout: &AnsatzLayout, params: &ParameterVector, noise: &NoiseModel) -> Result<Program> {
    if params.len() != layout.n_params() {
        return Err(Error::ParameterMismatch {
            expected: layout.n_params(),
            got: params.len(),
        });
    }
    layout.compile(noise)
}

/// Sample one circuit instance starting from `|0...0>`. Noise channels are
/// unraveled only when `noise.enabled`.
pub fn sample_trajectory(
    layout: &AnsatzLayout,
    params: &ParameterVector,
    noise: &NoiseModel,
    rng: &mut impl Rng,
) -> Result<TrajectoryRecord> {
    let initial = PureState::basis(layout.n_qubits(), 0);
    sample_trajectory_from(layout, params, noise, &initial, rng)
}

pub fn sample_trajectory_from(
    layout: &AnsatzLayout,
    params: &ParameterVector,
    noise: &NoiseModel,
    initial: &PureState,
    rng: &mut impl Rng,
) -> Result<TrajectoryRecord> {
    if initial.n_qubits() != layout.n_qubits() {
        return Err(Error::DimensionMismatch {
            left: initial.n_qubits(),
            right: layout.n_qubits(),
        });
    }
    let program = compile_for(layout, params, noise)?;
    Ok(run_program(&program, &params.values, initial, rng))
}

/// Generator for trajectory `index` under `master_seed`: one ChaCha stream
/// per trajectory, so any subset can be replayed independently.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

const CHUNK: usize = 256;

/// Monte Carlo estimate of the output state from `samples` trajectories,
/// with the aggregate standard error `sqrt(Tr Var / M)`.
pub fn estimate_density(
    layout: &AnsatzLayout,
    params: &ParameterVector,
    noise: &NoiseModel,
    samples: usize,
    master_seed: u64,
) -> Result<(DensityMatrix, f64)> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let program = compile_for(layout, params, noise)?;
    let n = layout.n_qubits();
    let d = 1 << n;
    let initial = PureState::basis(n, 0);
    let chunks: Vec<CMatrix> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc = CMatrix::zeros(d, d);
            for idx in chunk * CHUNK..((chunk + 1) * CHUNK).min(samples) {
                let mut rng = trajectory_rng(master_seed, idx as u64);
                let rec = run_program(&program, &params.values, &initial, &mut rng);
                let a = rec.state.amplitudes();
                acc += a * a.adjoint();
            }
            acc
        })
        .collect();
    let mut sum = CMatrix::zeros(d, d);
    for c in &chunks {
        sum += c;
    }
    let m = samples as f64;
    let mean = sum / C64::new(m, 0.0);
    let rho = DensityMatrix::from_matrix_unchecked(n, mean);
    let std_error = if samples > 1 {
        ((1.0 - rho.purity()).max(0.0) / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok((rho, std_error))
}

/// Every noiseless branch (reset fired or not, each measurement outcome)
/// with its probability.
pub fn enumerate_branches(layout: &AnsatzLayout, params: &ParameterVector) -> Result<Vec<(f64, PureState)>> {
    if layout.reset_count() > MAX_ENUMERATED_RESETS {
        return Err(Error::InvalidArgument(format!(
            "{} reset slots exceed the enumeration limit {MAX_ENUMERATED_RESETS}",
            layout.reset_count()
        )));
    }
    let program = compile_for(layout, params, &NoiseModel::noiseless())?;
    let n = layout.n_qubits();
    let mut out = Vec::new();
    let start: Vec<C64> = PureState::basis(n, 0).amplitudes().iter().copied().collect();
    walk(&program, &params.values, 0, start, 1.0, &mut out);
    Ok(out
        .into_iter()
        .map(|(w, v)| (w, PureState::from_raw(n, CVector::from_vec(v))))
        .collect())
}

fn walk(program: &Program, params: &[f64], from: usize, mut v: Vec<C64>, weight: f64, out: &mut Vec<(f64, Vec<C64>)>) {
    for (k, op) in program.ops().iter().enumerate().skip(from) {
        match *op {
            Op::Rot { mask, axis, angle } => {
                kernels::apply_1q_vec(&mut v, mask, &channels::rotation(axis, angle.value(params)))
            }
            Op::Cx { control, target } => kernels::cx_vec(&mut v, control, target),
            Op::Dephase { .. } | Op::AmpDamp { .. } => unreachable!("noiseless program"),
            Op::Reset { mask, offset, cap } => {
                let p = effective_p(params, offset, cap);
                let phi = bloch_amplitudes(params[offset + 1], params[offset + 2]);
                let p1 = prob_one(&v, mask);
                for (outcome, born) in [(0u8, 1.0 - p1), (1u8, p1)] {
                    if p > 0.0 && born > 0.0 {
                        let mut branch = v.clone();
                        measure_and_prepare(&mut branch, mask, outcome, &phi);
                        walk(program, params, k + 1, branch, weight * p * born, out);
                    }
                }
                if p < 1.0 {
                    walk(program, params, k + 1, v, weight * (1.0 - p), out);
                }
                return;
            }
        }
    }
    out.push((weight, v));
}

/// `sum_b w_b |psi_b><psi_b|`.
pub fn branch_mixture(branches: &[(f64, PureState)]) -> Result<DensityMatrix> {
    let first = branches
        .first()
        .ok_or_else(|| Error::InvalidArgument("no branches".into()))?;
    let n = first.1.n_qubits();
    let d = 1 << n;
    let mut acc = CMatrix::zeros(d, d);
    for (w, psi) in branches {
        let a = psi.amplitudes();
        acc += a * a.adjoint() * C64::new(*w, 0.0);
    }
    Ok(DensityMatrix::from_matrix_unchecked(n, acc))
}
