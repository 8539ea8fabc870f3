//! Fidelity versus number of dissipative layers for the XY ring at beta = 1.

use dvqa::ansatz::build_layout;
use dvqa::channels::NoiseModel;
use dvqa::hamiltonians::{gibbs_state, xy_hamiltonian};
use dvqa::optimize::{best_of, LossContext, OptimizerConfig};

fn main() -> dvqa::Result<()> {
    let n = 4;
    let target = gibbs_state(&xy_hamiltonian(n, 0.5, 0.5)?, 1.0)?;
    let config = OptimizerConfig {
        loss_stop: 0.0,
        max_steps: 1000,
        ..OptimizerConfig::default()
    };
    for depth in 0..=4 {
        let layout = build_layout(n, depth)?;
        let n_params = layout.n_params();
        let ctx = LossContext::new(layout, NoiseModel::noiseless(), target.clone())?;
        let best = best_of(&ctx, &[0, 1], &config)?;
        println!("D = {depth}: {n_params:>4} parameters, fidelity {:.5}", best.best().final_fidelity);
    }
    Ok(())
}
