//! Prepare Gibbs states of the 4-site transverse-field Ising ring at a few
//! temperatures with a noiseless circuit.
//!
//!     cargo run --release --example gibbs_tfi [restarts]

use dvqa::ansatz::build_layout;
use dvqa::channels::NoiseModel;
use dvqa::hamiltonians::{gibbs_state, tfi_hamiltonian};
use dvqa::optimize::{best_of, LossContext, OptimizerConfig};

fn main() -> dvqa::Result<()> {
    let restarts: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let n = 4;
    let ham = tfi_hamiltonian(n, 1.0)?;
    let layout = build_layout(n, 4)?;
    println!("{} parameters, {} restarts per temperature", layout.n_params(), restarts);

    let seeds: Vec<u64> = (0..restarts).collect();
    for beta in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let target = gibbs_state(&ham, beta)?;
        let purity = target.state.purity();
        let ctx = LossContext::new(layout.clone(), NoiseModel::noiseless(), target)?;
        let result = best_of(&ctx, &seeds, &OptimizerConfig::default())?;
        let best = result.best();
        println!(
            "beta = {beta:<4} target purity {purity:.4}  fidelity {:.5} after {} steps ({})",
            best.final_fidelity, best.steps_used, best.termination
        );
    }
    Ok(())
}
