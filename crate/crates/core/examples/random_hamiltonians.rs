//! Median fidelity over random translation-invariant two-local Hamiltonians,
//! driven through the experiment runner.

use dvqa::harness::{emit_plot_data, run_experiment, ExperimentConfig, GroupKey, ModelSpec, Stat};

fn main() -> dvqa::Result<()> {
    let mut cfg = ExperimentConfig::new(ModelSpec::Random { count: 6, seed: 2024 }, 4, 2, vec![0.5, 1.0]);
    cfg.restarts = 2;
    cfg.max_steps = 800;

    let rows = run_experiment(&cfg)?;
    for stat in [Stat::Median, Stat::Std] {
        let table = emit_plot_data(&rows, &[GroupKey::Beta], stat)?;
        println!("{}", table.columns.join("  "));
        for row in &table.rows {
            println!("{}", row.join("  "));
        }
    }
    Ok(())
}
