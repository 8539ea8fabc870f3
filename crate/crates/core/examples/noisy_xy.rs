//! XY ring with dephasing and amplitude damping after every CX. Compares the
//! noisy optimum with what the same parameters would give without noise.

use dvqa::ansatz::{build_layout, evolve, ParameterVector};
use dvqa::channels::NoiseModel;
use dvqa::hamiltonians::{gibbs_state, xy_hamiltonian};
use dvqa::harness::sample_noise_model;
use dvqa::optimize::{best_of, LossContext, OptimizerConfig};
use dvqa::qstate::{uhlmann_fidelity, DensityMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dvqa::Result<()> {
    let n = 4;
    let layout = build_layout(n, 4)?;
    let ham = xy_hamiltonian(n, 0.5, 0.5)?;
    let noise = sample_noise_model(n, [1e-3, 2e-3], 0.99, &mut ChaCha8Rng::seed_from_u64(11))?;
    let show = |rates: &[f64]| rates.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>().join(" ");
    println!("dephasing {}", show(&noise.lambda));
    println!("damping   {}", show(&noise.omega));

    for beta in [2.0, 5.0] {
        let target = gibbs_state(&ham, beta)?;
        let ctx = LossContext::new(layout.clone(), noise.clone(), target.clone())?;
        let result = best_of(&ctx, &[0, 1, 2], &OptimizerConfig::default())?;
        let best = result.best();

        let params = ParameterVector::from_values(&layout, best.final_params.clone(), 1.0)?;
        let clean = evolve(&layout, &params, &NoiseModel::noiseless(), &DensityMatrix::zero_state(n))?;
        println!(
            "beta = {beta}: noisy fidelity {:.4}, same parameters without noise {:.4}",
            best.final_fidelity,
            uhlmann_fidelity(&clean, &target.state)?
        );
    }
    Ok(())
}
