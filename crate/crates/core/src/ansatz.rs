//! Brick-wall dissipative ansatz on a ring: `D` layers of (even pairs, odd
//! pairs, one reset gate per qubit) followed by one coherent brick-wall layer.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::NoiseModel;
use crate::circuit::{Program, RESET_PARAMS, SU4_ANGLES};
use crate::error::{Error, Result};
use crate::qstate::DensityMatrix;

/// Largest ring the dense simulator is meant for.
pub const MAX_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    /// Two-qubit gate on `(j, j+1 mod n)` with 15 angles at `offset`.
    Su4 { pair: (usize, usize), offset: usize },
    /// Reset gate on `qubit`: probability, polar angle and azimuth at `offset`.
    Reset { qubit: usize, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzLayout {
    n_qubits: usize,
    depth: usize,
    slots: Vec<Slot>,
    n_params: usize,
}

/// Lay out the circuit for `n` qubits on a ring and `depth` dissipative layers.
pub fn build_layout(n: usize, depth: usize) -> Result<AnsatzLayout> {
    if n < 2 || !n.is_multiple_of(2) || n > MAX_QUBITS {
        return Err(Error::UnsupportedRing(n));
    }
    let mut slots = Vec::new();
    let mut offset = 0;
    let brick_wall = |slots: &mut Vec<Slot>, offset: &mut usize| {
        let even = (0..n).step_by(2);
        let odd = (1..n).step_by(2);
        for j in even.chain(odd) {
            slots.push(Slot::Su4 {
                pair: (j, (j + 1) % n),
                offset: *offset,
            });
            *offset += SU4_ANGLES;
        }
    };
    for _ in 0..depth {
        brick_wall(&mut slots, &mut offset);
        for qubit in 0..n {
            slots.push(Slot::Reset { qubit, offset });
            offset += RESET_PARAMS;
        }
    }
    brick_wall(&mut slots, &mut offset);
    Ok(AnsatzLayout {
        n_qubits: n,
        depth,
        slots,
        n_params: offset,
    })
}

impl AnsatzLayout {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn su4_count(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, Slot::Su4 { .. })).count()
    }

    pub fn reset_count(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, Slot::Reset { .. })).count()
    }

    /// Indices of the reset probabilities in the flat parameter vector.
    pub fn probability_indices(&self) -> Vec<usize> {
        self.slots
            .iter()
            .filter_map(|s| match *s {
                Slot::Reset { offset, .. } => Some(offset),
                Slot::Su4 { .. } => None,
            })
            .collect()
    }

    pub(crate) fn compile(&self, noise: &NoiseModel) -> Result<Program> {
        noise.check_qubits(self.n_qubits)?;
        let cap = noise.p_cap();
        let mut program = Program::new(self.n_qubits, self.n_params);
        for slot in &self.slots {
            match *slot {
                Slot::Su4 { pair, offset } => program.push_su4(pair, offset, noise),
                Slot::Reset { qubit, offset } => program.push_reset(qubit, offset, cap),
            }
        }
        Ok(program)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    /// Rotation angle, kept in `(-pi, pi]`.
    Periodic,
    /// Probability in `[0, max]`.
    Probability { max: f64 },
}

/// Flat variational parameters with per-entry bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    bounds: Vec<Bound>,
}

impl ParameterVector {
    /// Wrap raw values, clamping probabilities into `[0, p_cap]`.
    pub fn from_values(layout: &AnsatzLayout, values: Vec<f64>, p_cap: f64) -> Result<Self> {
        if values.len() != layout.n_params() {
            return Err(Error::ParameterMismatch {
                expected: layout.n_params(),
                got: values.len(),
            });
        }
        let mut bounds = vec![Bound::Periodic; values.len()];
        for i in layout.probability_indices() {
            bounds[i] = Bound::Probability { max: p_cap };
        }
        let mut pv = Self { values, bounds };
        pv.project();
        Ok(pv)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    /// Clamp probabilities into their box and wrap angles into `(-pi, pi]`.
    pub fn project(&mut self) {
        for (v, b) in self.values.iter_mut().zip(&self.bounds) {
            *v = match *b {
                Bound::Periodic => wrap_angle(*v),
                Bound::Probability { max } => v.clamp(0.0, max),
            };
        }
    }

    pub fn satisfies_bounds(&self) -> bool {
        self.values.iter().zip(&self.bounds).all(|(&v, b)| match *b {
            Bound::Periodic => v > -PI && v <= PI,
            Bound::Probability { max } => (0.0..=max).contains(&v),
        })
    }
}

/// Map an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let w = (x + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Uniform initialization: angles in `[-pi, pi)`, probabilities in `[0, 1]`
/// clamped to `p_cap`.
pub fn init_parameters(layout: &AnsatzLayout, rng_seed: u64, p_cap: f64) -> ParameterVector {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut values = Vec::with_capacity(layout.n_params());
    for slot in layout.slots() {
        match slot {
            Slot::Su4 { .. } => values.extend((0..SU4_ANGLES).map(|_| rng.random_range(-PI..PI))),
            Slot::Reset { .. } => {
                values.push(rng.random_range(0.0..=1.0_f64).min(p_cap));
                values.push(rng.random_range(-PI..PI));
                values.push(rng.random_range(-PI..PI));
            }
        }
    }
    ParameterVector::from_values(layout, values, p_cap).expect("length matches layout")
}

/// Run `rho0` through the circuit. Reset probabilities are clamped to the
/// noise model's cap when noise is enabled.
pub fn evolve(
    layout: &AnsatzLayout,
    params: &ParameterVector,
    noise: &NoiseModel,
    rho0: &DensityMatrix,
) -> Result<DensityMatrix> {
    if params.len() != layout.n_params() {
        return Err(Error::ParameterMismatch {
            expected: layout.n_params(),
            got: params.len(),
        });
    }
    if rho0.n_qubits() != layout.n_qubits() {
        return Err(Error::DimensionMismatch {
            left: rho0.n_qubits(),
            right: layout.n_qubits(),
        });
    }
    let program = layout.compile(noise)?;
    let mut out = rho0.clone();
    program.forward(&params.values, out.matrix_mut());
    Ok(out)
}
