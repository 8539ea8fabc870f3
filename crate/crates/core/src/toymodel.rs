//! Single-qubit toy model: a unitary followed by depolarizing noise, a reset
//! gate and more depolarizing noise.
//!
//! The reset target is the pure state along the ideal output's Bloch
//! direction, so the reset can only lengthen the Bloch vector. Whether it can
//! undo both noise applications depends on how much room there is between
//! the state's radius and the sphere.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::channels::{
    apply_local_unitary, depolarizing_channel, pauli, reset_channel, Axis, BlochAngles, ResetGateParams,
};
use crate::error::{Error, Result};
use crate::qstate::{trace_distance, CMatrix, DensityMatrix};

const DIRECTION_TOL: f64 = 1e-10;
/// Slack on `lambda <= 1 - r` so boundary points survive rounding.
const FEASIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyScenario {
    r: f64,
    direction: [f64; 3],
    lambda: f64,
    u: CMatrix,
}

impl ToyScenario {
    pub fn new(r: f64, direction: [f64; 3], lambda: f64, u: CMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::RateOutOfRange { name: "r", value: r });
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::RateOutOfRange {
                name: "lambda",
                value: lambda,
            });
        }
        let norm = norm3(direction);
        if (norm - 1.0).abs() > DIRECTION_TOL {
            return Err(Error::InvalidArgument(format!("direction has norm {norm}, expected 1")));
        }
        if u.nrows() != 2 || u.ncols() != 2 {
            return Err(Error::DimensionMismatch {
                left: u.nrows(),
                right: 2,
            });
        }
        Ok(Self { r, direction, lambda, u })
    }

    /// Input state along +Z with identity unitary.
    pub fn along_z(r: f64, lambda: f64) -> Result<Self> {
        Self::new(r, [0.0, 0.0, 1.0], lambda, CMatrix::identity(2, 2))
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.u
    }

    pub fn input_state(&self) -> DensityMatrix {
        bloch_state(scale3(self.direction, self.r))
    }

    /// Noise-free output `U rho0 U^dag`.
    pub fn ideal_output(&self) -> Result<DensityMatrix> {
        apply_local_unitary(&self.input_state(), &self.u, &[0])
    }

    /// Unit Bloch direction of the ideal output.
    pub fn output_direction(&self) -> Result<[f64; 3]> {
        let rotated = apply_local_unitary(&bloch_state(self.direction), &self.u, &[0])?;
        let v = bloch_vector(&rotated);
        let norm = norm3(v);
        Ok(scale3(v, 1.0 / norm))
    }
}

/// Outcome of solving for the reset probability that restores the ideal radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResetSolution {
    Feasible { p: f64 },
    /// No `p` in `[0, 1]` works; `p = 1` gets closest.
    Infeasible { best_p: f64 },
}

impl ResetSolution {
    pub fn p(&self) -> f64 {
        match *self {
            ResetSolution::Feasible { p } => p,
            ResetSolution::Infeasible { best_p } => best_p,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, ResetSolution::Feasible { .. })
    }
}

/// Solve `(1-l)((1-p)(1-l) + p/r) = 1` for `p`.
pub fn optimal_reset_probability(r: f64, lambda: f64) -> Result<ResetSolution> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!("radius must lie in (0, 1], got {r}")));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(ResetSolution::Feasible { p: 0.0 });
    }
    if lambda + r > 1.0 + FEASIBILITY_TOL {
        return Ok(ResetSolution::Infeasible { best_p: 1.0 });
    }
    let keep = 1.0 - lambda;
    let p = (1.0 / keep - keep) / (1.0 / r - keep);
    Ok(ResetSolution::Feasible { p: p.clamp(0.0, 1.0) })
}

/// Closed-form Bloch radius after the full noisy pipeline.
pub fn toy_output_radius(r: f64, lambda: f64, p: f64) -> f64 {
    let keep = 1.0 - lambda;
    keep * ((1.0 - p) * keep * r + p)
}

/// Run the pipeline through the channel primitives.
pub fn toy_output_state(s: &ToyScenario, p: f64) -> Result<DensityMatrix> {
    let target = BlochAngles::from_vector(s.output_direction()?)?;
    let rho = apply_local_unitary(&s.input_state(), &s.u, &[0])?;
    let rho = depolarizing_channel(&rho, s.lambda)?;
    let rho = reset_channel(&rho, 0, &ResetGateParams { p, target })?;
    depolarizing_channel(&rho, s.lambda)
}

/// Trace distance between the noisy output at `p` and the ideal output.
pub fn toy_residual(s: &ToyScenario, p: f64) -> Result<f64> {
    trace_distance(&toy_output_state(s, p)?, &s.ideal_output()?)
}

/// One line of the `(lambda, r, p, residual)` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToyRow {
    pub lambda: f64,
    pub r: f64,
    pub p: f64,
    pub feasible: bool,
    pub residual: f64,
}

/// Tabulate the optimal reset probability and remaining error over a grid.
/// Points with `r = 0` or `lambda = 1` are skipped.
pub fn toy_table(lambdas: &[f64], radii: &[f64]) -> Result<Vec<ToyRow>> {
    let mut rows = Vec::new();
    for &lambda in lambdas {
        for &r in radii {
            if r <= 0.0 || lambda >= 1.0 {
                continue;
            }
            let sol = optimal_reset_probability(r, lambda)?;
            let scenario = ToyScenario::along_z(r, lambda)?;
            rows.push(ToyRow {
                lambda,
                r,
                p: sol.p(),
                feasible: sol.is_feasible(),
                residual: toy_residual(&scenario, sol.p())?,
            });
        }
    }
    Ok(rows)
}

fn bloch_state(v: [f64; 3]) -> DensityMatrix {
    let mut m = CMatrix::identity(2, 2);
    for (axis, c) in [Axis::X, Axis::Y, Axis::Z].into_iter().zip(v) {
        m += pauli(axis) * C64::new(c, 0.0);
    }
    DensityMatrix::from_matrix_unchecked(1, m * C64::new(0.5, 0.0))
}

fn bloch_vector(rho: &DensityMatrix) -> [f64; 3] {
    let m = rho.matrix();
    [2.0 * m[(1, 0)].re, 2.0 * m[(1, 0)].im, (m[(0, 0)] - m[(1, 1)]).re]
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn scale3(v: [f64; 3], s: f64) -> [f64; 3] {
    [v[0] * s, v[1] * s, v[2] * s]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::rotation_matrix;

    fn tilted(r: f64, lambda: f64) -> ToyScenario {
        let dir = [0.6, 0.0, 0.8];
        let u = rotation_matrix(Axis::Y, 0.7) * rotation_matrix(Axis::Z, -1.3);
        ToyScenario::new(r, dir, lambda, u).unwrap()
    }

    #[test]
    fn no_noise_needs_no_reset() {
        assert_eq!(optimal_reset_probability(0.8, 0.0).unwrap(), ResetSolution::Feasible { p: 0.0 });
    }

    #[test]
    fn hand_solved_probability() {
        // (1/0.9 - 0.9) / (1/0.8 - 0.9) = 0.21111.../0.35
        let p = optimal_reset_probability(0.8, 0.1).unwrap();
        let expected = (1.0 / 0.9 - 0.9) / 0.35;
        assert!((p.p() - expected).abs() < 1e-14);
        assert!((p.p() - 0.603_174_603_174_6).abs() < 1e-12);
        assert!(p.is_feasible());
    }

    #[test]
    fn too_much_noise_is_infeasible() {
        let sol = optimal_reset_probability(0.8, 0.3).unwrap();
        assert_eq!(sol, ResetSolution::Infeasible { best_p: 1.0 });
    }

    #[test]
    fn boundary_is_feasible() {
        for (r, lambda) in [(0.75, 0.25), (0.9, 0.1), (0.8, 0.2)] {
            let sol = optimal_reset_probability(r, lambda).unwrap();
            assert!(sol.is_feasible(), "r={r} lambda={lambda}");
            assert!((sol.p() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_radius_rejected() {
        assert!(optimal_reset_probability(0.0, 0.1).is_err());
    }

    #[test]
    fn optimal_p_restores_ideal_output() {
        let s = tilted(0.8, 0.1);
        let p = optimal_reset_probability(0.8, 0.1).unwrap().p();
        assert!(toy_residual(&s, p).unwrap() < 1e-12);
    }

    #[test]
    fn no_reset_shrinks_twice() {
        let s = tilted(0.8, 0.1);
        let out = toy_output_state(&s, 0.0).unwrap();
        let radius = norm3(bloch_vector(&out));
        assert!((radius - 0.81 * 0.8).abs() < 1e-12);
        assert!((toy_residual(&s, 0.0).unwrap() - 0.152).abs() < 1e-12);
    }

    #[test]
    fn channel_pipeline_matches_closed_form() {
        let s = tilted(0.55, 0.2);
        let dir = s.output_direction().unwrap();
        for p in [0.0, 0.1, 0.37, 0.8, 1.0] {
            let out = bloch_vector(&toy_output_state(&s, p).unwrap());
            let radius = toy_output_radius(0.55, 0.2, p);
            for k in 0..3 {
                assert!((out[k] - radius * dir[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn output_direction_follows_unitary() {
        let s = tilted(0.5, 0.0);
        let ideal = bloch_vector(&s.ideal_output().unwrap());
        let dir = s.output_direction().unwrap();
        for k in 0..3 {
            assert!((ideal[k] - 0.5 * dir[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn table_skips_degenerate_points() {
        let rows = toy_table(&[0.0, 0.1, 1.0], &[0.0, 0.5, 0.9]).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.residual >= 0.0));
    }

    #[test]
    fn scenario_validation() {
        assert!(ToyScenario::new(0.5, [1.0, 1.0, 0.0], 0.1, CMatrix::identity(2, 2)).is_err());
        assert!(ToyScenario::new(1.5, [0.0, 0.0, 1.0], 0.1, CMatrix::identity(2, 2)).is_err());
        assert!(ToyScenario::new(0.5, [0.0, 0.0, 1.0], -0.1, CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn grid_search_never_beats_closed_form() {
        for (r, lambda) in [(0.3, 0.2), (0.6, 0.35), (0.9, 0.05), (0.5, 0.5)] {
            let s = tilted(r, lambda);
            let closed = toy_residual(&s, optimal_reset_probability(r, lambda).unwrap().p()).unwrap();
            let grid = (0..=10_000)
                .map(|k| toy_residual(&s, k as f64 * 1e-4).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(closed <= grid + 1e-9, "r={r} lambda={lambda}: {closed} vs {grid}");
            assert!(closed < 1e-12);
        }
    }

    #[test]
    fn infeasible_residual_decreases_in_p() {
        let s = tilted(0.8, 0.3);
        let residuals: Vec<f64> = (0..=100).map(|k| toy_residual(&s, k as f64 / 100.0).unwrap()).collect();
        assert!(residuals.windows(2).all(|w| w[1] < w[0]));
        // At p = 1 the output radius is 1 - lambda, short of r by r - (1 - lambda).
        assert!((residuals[100] - (0.8 - 0.7)).abs() < 1e-12);
    }
}
