//! The reset channel as a mixture of pure circuit instances: exact branch
//! enumeration and Monte Carlo sampling against the density-matrix result.

use dvqa::ansatz::{build_layout, evolve, init_parameters};
use dvqa::channels::NoiseModel;
use dvqa::qstate::{trace_distance, DensityMatrix};
use dvqa::trajectories::{branch_mixture, enumerate_branches, estimate_density, sample_trajectory, trajectory_rng};

fn main() -> dvqa::Result<()> {
    let layout = build_layout(2, 1)?;
    let params = init_parameters(&layout, 5, 1.0);
    let noise = NoiseModel::noiseless();
    let exact = evolve(&layout, &params, &noise, &DensityMatrix::zero_state(2))?;

    let branches = enumerate_branches(&layout, &params)?;
    let mixture = branch_mixture(&branches)?;
    println!("{} branches, max deviation {:.1e}", branches.len(), mixture.max_abs_diff(&exact));

    let record = sample_trajectory(&layout, &params, &noise, &mut trajectory_rng(1, 0))?;
    println!("one instance: resets fired {:?}, outcomes {:?}", record.branches, record.outcomes);

    for samples in [100, 1_000, 10_000, 100_000] {
        let (estimate, std_error) = estimate_density(&layout, &params, &noise, samples, 1)?;
        println!(
            "M = {samples:>6}: trace distance {:.4}, standard error {:.4}",
            trace_distance(&estimate, &exact)?,
            std_error
        );
    }
    Ok(())
}
