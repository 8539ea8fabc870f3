use std::fs;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dvqa::harness::{
    emit_plot_data, load_experiment, load_sweep, parse_group_keys, read_jsonl, run_experiment, run_sweep,
    validate_trajectories, write_results, Stat, JSONL_NAME,
};
use dvqa::toymodel::toy_table;

#[derive(Parser)]
#[command(name = "dvqa", version, about = "Dissipative variational Gibbs state preparation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment configuration.
    PrepareGibbs {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Run a configuration whose `n` and `depth_d` are lists.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Tabulate the single-qubit reset-versus-noise model as CSV.
    ToyModel {
        /// Comma-separated noise rates.
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        /// Comma-separated Bloch radii.
        #[arg(long, value_delimiter = ',', required = true)]
        radius: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare trajectory sampling with exact evolution.
    ValidateTrajectories {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Aggregate a results file into a plot table on stdout.
    EmitPlots {
        /// `results.jsonl` or the directory containing it.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "beta")]
        group_by: String,
        #[arg(long, default_value = "best")]
        stat: Stat,
    },
}

fn run(cli: Cli) -> dvqa::Result<()> {
    match cli.command {
        Command::PrepareGibbs { config, out } => {
            let rows = run_experiment(&load_experiment(&config)?)?;
            let (jsonl, csv) = write_results(&out, &rows)?;
            eprintln!("wrote {} rows to {} and {}", rows.len(), jsonl.display(), csv.display());
        }
        Command::Sweep { config, out } => {
            let rows = run_sweep(&load_sweep(&config)?)?;
            let (jsonl, csv) = write_results(&out, &rows)?;
            eprintln!("wrote {} rows to {} and {}", rows.len(), jsonl.display(), csv.display());
        }
        Command::ToyModel { lambda, radius, out } => {
            let rows = toy_table(&lambda, &radius)?;
            let sink: Box<dyn io::Write> = match out {
                Some(path) => Box::new(BufWriter::new(fs::File::create(path)?)),
                None => Box::new(io::stdout().lock()),
            };
            let mut w = csv::Writer::from_writer(sink);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Command::ValidateTrajectories { config, samples } => {
            let report = validate_trajectories(&load_experiment(&config)?, samples)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::EmitPlots { input, group_by, stat } => {
            let path = if input.is_dir() { input.join(JSONL_NAME) } else { input };
            let rows = read_jsonl(fs::File::open(path)?)?;
            let table = emit_plot_data(&rows, &parse_group_keys(&group_by)?, stat)?;
            table.write_csv(io::stdout().lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
