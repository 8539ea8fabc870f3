//! Infidelity loss, gradients, projected Adam and the restart protocol.

use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{init_parameters, AnsatzLayout, Bound, ParameterVector};
use crate::channels::NoiseModel;
use crate::circuit::Program;
use crate::error::{Error, Result};
use crate::hamiltonians::GibbsTarget;
use crate::qstate::{eigh, fidelity_with_sqrt, psd_sqrt, symmetrize, CMatrix, DensityMatrix};

/// Everything needed to evaluate the loss of a parameter vector.
#[derive(Debug, Clone)]
pub struct LossContext {
    layout: AnsatzLayout,
    noise: NoiseModel,
    rho0: DensityMatrix,
    target: GibbsTarget,
    program: Program,
    sqrt_target: CMatrix,
}

impl LossContext {
    /// Context starting from `|0...0><0...0|`.
    pub fn new(layout: AnsatzLayout, noise: NoiseModel, target: GibbsTarget) -> Result<Self> {
        let rho0 = DensityMatrix::zero_state(layout.n_qubits());
        Self::with_initial_state(layout, noise, target, rho0)
    }

    pub fn with_initial_state(
        layout: AnsatzLayout,
        noise: NoiseModel,
        target: GibbsTarget,
        rho0: DensityMatrix,
    ) -> Result<Self> {
        for n in [rho0.n_qubits(), target.state.n_qubits()] {
            if n != layout.n_qubits() {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: layout.n_qubits(),
                });
            }
        }
        let program = layout.compile(&noise)?;
        let sqrt_target = psd_sqrt(target.state.matrix())?;
        Ok(Self {
            layout,
            noise,
            rho0,
            target,
            program,
            sqrt_target,
        })
    }

    pub fn layout(&self) -> &AnsatzLayout {
        &self.layout
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn target(&self) -> &GibbsTarget {
        &self.target
    }

    pub fn initial_state(&self) -> &DensityMatrix {
        &self.rho0
    }

    /// Circuit output for `params`.
    pub fn output_state(&self, params: &ParameterVector) -> Result<DensityMatrix> {
        self.check(params)?;
        let mut rho = self.rho0.clone();
        self.program.forward(&params.values, rho.matrix_mut());
        Ok(rho)
    }

    fn check(&self, params: &ParameterVector) -> Result<()> {
        if params.len() != self.layout.n_params() {
            return Err(Error::ParameterMismatch {
                expected: self.layout.n_params(),
                got: params.len(),
            });
        }
        Ok(())
    }

    fn loss_of(&self, values: &[f64]) -> f64 {
        let mut rho = self.rho0.matrix().clone();
        self.program.forward(values, &mut rho);
        symmetrize(&mut rho);
        1.0 - fidelity_with_sqrt(&self.sqrt_target, &rho).expect("square root precomputed")
    }

    /// Loss and its exact gradient by a reverse pass through the channel sequence.
    fn loss_and_adjoint_gradient(&self, values: &[f64]) -> (f64, Vec<f64>) {
        let mut rho = self.rho0.matrix().clone();
        let tape = self.program.forward_taped(values, &mut rho);
        let (fidelity, dfid) = fidelity_and_derivative(&self.sqrt_target, &rho);
        let adjoint = -dfid;
        let grad = self.program.backward(values, tape, rho, adjoint);
        (1.0 - fidelity, grad)
    }
}

/// `F(rho, sigma)` and the Hermitian `G` with `dF = Re Tr(G d rho)`, given `sqrt(sigma)`.
///
/// With `M = S rho S` and `S = sqrt(sigma)`: `G = Tr(sqrt M) . S M^{-1/2} S`,
/// the inverse taken on the support of `M`.
fn fidelity_and_derivative(sqrt_sigma: &CMatrix, rho: &CMatrix) -> (f64, CMatrix) {
    let mut m = sqrt_sigma * rho * sqrt_sigma;
    symmetrize(&mut m);
    let (values, vectors) = eigh(&m);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = top * 1e-14;
    let root_trace: f64 = values.iter().map(|&v| v.max(0.0).sqrt()).sum();
    let d = m.nrows();
    let scaled = CMatrix::from_fn(d, d, |r, c| {
        let v = values[c];
        if v > cutoff {
            vectors[(r, c)] * (1.0 / v.sqrt())
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let inv_root = scaled * vectors.adjoint();
    let g = sqrt_sigma * inv_root * sqrt_sigma * C64::new(root_trace, 0.0);
    let fidelity = (root_trace * root_trace).clamp(0.0, 1.0);
    (fidelity, g)
}

/// `1 - F(rho(params), rho_G)`.
pub fn infidelity(ctx: &LossContext, params: &ParameterVector) -> Result<f64> {
    ctx.check(params)?;
    Ok(ctx.loss_of(&params.values))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientScheme {
    CentralFd { h: f64 },
    ForwardFd { h: f64 },
    /// Exact reverse-mode gradient through the channel sequence.
    #[default]
    Adjoint,
}

pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// `dPhi / d params`. Finite-difference schemes fall back to one-sided
/// differences for probabilities within `h` of a bound.
pub fn gradient(ctx: &LossContext, params: &ParameterVector, scheme: GradientScheme) -> Result<Vec<f64>> {
    ctx.check(params)?;
    Ok(loss_and_gradient(ctx, params, scheme).1)
}

fn loss_and_gradient(ctx: &LossContext, params: &ParameterVector, scheme: GradientScheme) -> (f64, Vec<f64>) {
    let (h, central) = match scheme {
        GradientScheme::Adjoint => return ctx.loss_and_adjoint_gradient(&params.values),
        GradientScheme::CentralFd { h } => (h, true),
        GradientScheme::ForwardFd { h } => (h, false),
    };
    let base = ctx.loss_of(&params.values);
    let grad = (0..params.len())
        .into_par_iter()
        .map(|k| {
            let x = params.values[k];
            let (lo, hi) = match params.bounds()[k] {
                Bound::Periodic => (f64::NEG_INFINITY, f64::INFINITY),
                Bound::Probability { max } => (0.0, max),
            };
            let eval = |v: f64| {
                let mut shifted = params.values.clone();
                shifted[k] = v;
                ctx.loss_of(&shifted)
            };
            if central && x - h >= lo && x + h <= hi {
                (eval(x + h) - eval(x - h)) / (2.0 * h)
            } else if x + h <= hi {
                (eval(x + h) - base) / h
            } else {
                (base - eval(x - h)) / h
            }
        })
        .collect();
    (base, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.02,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self {
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            config,
        }
    }
}

/// One bias-corrected Adam update followed by projection onto the parameter box.
pub fn adam_step(state: &AdamState, params: &ParameterVector, grad: &[f64]) -> (AdamState, ParameterVector) {
    assert_eq!(grad.len(), params.len(), "gradient length");
    assert_eq!(state.m.len(), params.len(), "moment length");
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let step = state.step + 1;
    let bc1 = 1.0 - beta1.powi(step as i32);
    let bc2 = 1.0 - beta2.powi(step as i32);
    let mut next = state.clone();
    next.step = step;
    let mut out = params.clone();
    for k in 0..grad.len() {
        let g = grad[k];
        next.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g;
        next.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g;
        let m_hat = next.m[k] / bc1;
        let v_hat = next.v[k] / bc2;
        out.values[k] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    out.project();
    (next, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_steps: usize,
    pub loss_stop: f64,
    pub adam: AdamConfig,
    pub gradient: GradientScheme,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_steps: 2000,
            loss_stop: 1e-3,
            adam: AdamConfig::default(),
            gradient: GradientScheme::Adjoint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxSteps,
    LossThreshold,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::MaxSteps => "max_steps",
            Termination::LossThreshold => "loss_threshold",
        })
    }
}

/// One optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub n_qubits: usize,
    pub depth: usize,
    pub beta: f64,
    pub noise: NoiseModel,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    /// Loss before each update.
    pub loss_trace: Vec<f64>,
    pub steps_used: usize,
    pub final_params: Vec<f64>,
    pub final_loss: f64,
    pub final_fidelity: f64,
    pub termination: Termination,
    pub wall_seconds: f64,
}

/// Optimize from a uniformly random start drawn with `seed`.
pub fn optimize_run(ctx: &LossContext, seed: u64, config: &OptimizerConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let layout = ctx.layout();
    let mut params = init_parameters(layout, seed, ctx.noise.p_cap());
    let mut adam = AdamState::new(params.len(), config.adam);
    let mut loss_trace = Vec::with_capacity(config.max_steps.min(4096));
    let mut termination = Termination::MaxSteps;
    let mut final_loss = None;

    for _ in 0..config.max_steps {
        let (loss, grad) = loss_and_gradient(ctx, &params, config.gradient);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidState(format!("non-finite loss or gradient at step {}", adam.step)));
        }
        loss_trace.push(loss);
        if loss < config.loss_stop {
            termination = Termination::LossThreshold;
            final_loss = Some(loss);
            break;
        }
        (adam, params) = adam_step(&adam, &params, &grad);
    }
    let final_loss = match final_loss {
        Some(l) => l,
        None => ctx.loss_of(&params.values),
    };
    Ok(RunRecord {
        n_qubits: layout.n_qubits(),
        depth: layout.depth(),
        beta: ctx.target.beta,
        noise: ctx.noise.clone(),
        optimizer: *config,
        seed,
        loss_trace,
        steps_used: adam.step as usize,
        final_params: params.values,
        final_loss,
        final_fidelity: 1.0 - final_loss,
        termination,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// All restarts of a best-of-k protocol, in seed order.
#[derive(Debug, Clone, PartialEq)]
pub struct BestOf {
    pub runs: Vec<RunRecord>,
    pub best_index: usize,
}

impl BestOf {
    pub fn best(&self) -> &RunRecord {
        &self.runs[self.best_index]
    }
}

/// Run one optimization per seed (concurrently) and keep the highest final
/// fidelity; ties go to the earliest seed.
pub fn best_of(ctx: &LossContext, seeds: &[u64], config: &OptimizerConfig) -> Result<BestOf> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("best_of needs at least one seed".into()));
    }
    let runs = seeds
        .par_iter()
        .map(|&seed| optimize_run(ctx, seed, config))
        .collect::<Result<Vec<_>>>()?;
    let best_index = runs
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.final_fidelity > runs[best].final_fidelity { i } else { best });
    Ok(BestOf { runs, best_index })
}
