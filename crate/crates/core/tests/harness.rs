use std::fs;

use dvqa::harness::{
    audit_row, parse_experiment, parse_sweep, run_experiment, run_sweep, validate_trajectories, write_results,
    ExperimentConfig, ModelSpec, NoiseRedraw, Restart,
};

fn tiny(betas: Vec<f64>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ModelSpec::Tfi { h: 1.0 }, 2, 1, betas);
    cfg.restarts = 2;
    cfg.max_steps = 20;
    cfg
}

#[test]
fn single_restart_reaches_high_fidelity() {
    let mut cfg = ExperimentConfig::new(ModelSpec::Tfi { h: 1.0 }, 2, 2, vec![1.0]);
    cfg.restarts = 1;
    let rows = run_experiment(&cfg).unwrap();
    let best: Vec<_> = rows.iter().filter(|r| r.restart == Restart::Best).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(best.len(), 1);
    assert!(best[0].fidelity >= 0.99, "{}", best[0].fidelity);
}

#[test]
fn one_best_row_per_beta() {
    let rows = run_experiment(&tiny(vec![0.5, 1.0, 2.0, 4.0, 8.0])).unwrap();
    assert_eq!(rows.iter().filter(|r| r.restart == Restart::Best).count(), 5);
    assert_eq!(rows.len(), 15);
    for chunk in rows.chunks(3) {
        let top = chunk[..2].iter().map(|r| r.fidelity).fold(0.0, f64::max);
        assert_eq!(chunk[2].restart, Restart::Best);
        assert_eq!(chunk[2].fidelity, top);
    }
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let mut cfg = tiny(vec![1.0, 2.0]);
    cfg.noisy = true;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, workers) in dirs.iter().zip([1, 3]) {
        cfg.workers = Some(workers);
        write_results(dir.path(), &run_experiment(&cfg).unwrap()).unwrap();
    }
    for name in ["results.jsonl", "results.csv"] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} differs");
    }
}

#[test]
fn stored_rows_are_auditable() {
    let mut cfg = tiny(vec![1.5]);
    cfg.model = ModelSpec::Random { count: 2, seed: 3 };
    cfg.noisy = true;
    cfg.noise_redraw = NoiseRedraw::PerRestart;
    for row in run_experiment(&cfg).unwrap() {
        let again = audit_row(&row).unwrap();
        assert!((again - row.fidelity).abs() < 1e-10, "{again} vs {}", row.fidelity);
    }
}

#[test]
fn noise_redraw_policy() {
    let mut cfg = tiny(vec![1.0]);
    cfg.noisy = true;
    let rows = run_experiment(&cfg).unwrap();
    assert_eq!(rows[0].noise, rows[1].noise);
    cfg.noise_redraw = NoiseRedraw::PerRestart;
    let rows = run_experiment(&cfg).unwrap();
    assert_ne!(rows[0].noise, rows[1].noise);
    assert!(rows[0].noise.lambda.iter().all(|r| (1e-3..=2e-3).contains(r)));
}

#[test]
fn timing_is_opt_in() {
    let mut cfg = tiny(vec![1.0]);
    assert!(run_experiment(&cfg).unwrap().iter().all(|r| r.wall_seconds == 0.0));
    cfg.record_timing = true;
    assert!(run_experiment(&cfg).unwrap().iter().any(|r| r.wall_seconds > 0.0));
}

#[test]
fn sweep_covers_every_point() {
    let text = r#"
schema_version = 1
model = { kind = "xy", gamma = 0.5, h = 0.5 }
n = [2]
depth_d = [0, 1]
betas = [1.0, 2.0]
restarts = 1
max_steps = 5
"#;
    let rows = run_sweep(&parse_sweep(text).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert_eq!(rows[0].depth, 0);
    assert_eq!(rows.last().unwrap().depth, 1);
}

#[test]
fn noiseless_trajectory_report() {
    let cfg = parse_experiment(
        r#"
schema_version = 1
model = { kind = "tfi", h = 1.0 }
n = 2
depth_d = 1
betas = [1.0]
master_seed = 12
"#,
    )
    .unwrap();
    let report = validate_trajectories(&cfg, 2000).unwrap();
    assert_eq!(report.branches, Some(9));
    assert!(report.enumeration_error.unwrap() < 1e-10);
    assert!(report.monte_carlo_trace_distance < 0.2);
}
