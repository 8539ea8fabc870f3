//! Run a small experiment from a TOML config, write the JSONL and CSV result
//! files, and check a stored row against its saved parameters.

use dvqa::harness::{audit_row, parse_experiment, read_jsonl, run_experiment, write_results};

const CONFIG: &str = r#"
schema_version = 1
model = { kind = "xy", gamma = 0.5, h = 0.5 }
n = 2
depth_d = 2
betas = [1.0, 3.0]
noisy = true
restarts = 3
max_steps = 500
master_seed = 99
"#;

fn main() -> dvqa::Result<()> {
    let cfg = parse_experiment(CONFIG)?;
    let rows = run_experiment(&cfg)?;
    let dir = std::env::temp_dir().join("dvqa-example");
    let (jsonl, csv) = write_results(&dir, &rows)?;
    println!("{}", std::fs::read_to_string(&csv)?);

    let stored = read_jsonl(std::fs::File::open(jsonl)?)?;
    let row = &stored[0];
    println!("row 0 stored {:.12}, recomputed {:.12}", row.fidelity, audit_row(row)?);
    Ok(())
}
