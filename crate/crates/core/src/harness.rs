//! Experiment orchestration: configuration files, noise sampling, seeded
//! sweeps, result files and aggregated plot tables.
//!
//! Seeds are derived top-down with [`split_seed`]:
//! `master_seed -> instance -> beta point -> restart`, plus a separate
//! stream for noise draws. Every output byte is a function of the
//! configuration alone, regardless of how many workers run it.

use std::cmp::Ordering;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{build_layout, evolve, init_parameters, ParameterVector};
use crate::channels::{NoiseModel, DEFAULT_P_STAR};
use crate::error::{Error, Result};
use crate::hamiltonians::{gibbs_state, GibbsTarget, ModelDescriptor};
use crate::optimize::{optimize_run, AdamConfig, GradientScheme, LossContext, OptimizerConfig, Termination};
use crate::qstate::{trace_distance, DensityMatrix};
use crate::trajectories::{branch_mixture, enumerate_branches, estimate_density, MAX_ENUMERATED_RESETS};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "DVQA_WORKERS";

pub const CSV_COLUMNS: [&str; 11] = [
    "model",
    "n",
    "D",
    "beta",
    "noisy",
    "seed",
    "restart",
    "fidelity",
    "steps",
    "termination",
    "wall_seconds",
];

const NOISE_STREAM: u64 = u64::MAX;
const TRAJECTORY_STREAM: u64 = u64::MAX - 1;

/// SplitMix64 finalizer applied to `parent` perturbed by `stream`.
pub fn split_seed(parent: u64, stream: u64) -> u64 {
    let mut z = parent ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Tfi { h: f64 },
    Xy { gamma: f64, h: f64 },
    /// `count` random translation-invariant Hamiltonians; instance `k` uses
    /// seed `split_seed(seed, k)`.
    Random { count: usize, seed: u64 },
}

impl ModelSpec {
    pub fn instances(&self) -> Vec<ModelDescriptor> {
        match *self {
            ModelSpec::Tfi { h } => vec![ModelDescriptor::Tfi { h }],
            ModelSpec::Xy { gamma, h } => vec![ModelDescriptor::Xy { gamma, h }],
            ModelSpec::Random { count, seed } => (0..count as u64)
                .map(|k| ModelDescriptor::Random {
                    seed: split_seed(seed, k),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseRedraw {
    /// One noise draw shared by all restarts at a point.
    #[default]
    PerPoint,
    PerRestart,
}

/// Experiment settings. `S` is the type of the `n` and `depth_d` fields:
/// a single value for one experiment, a list for a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig<S = usize> {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub n: S,
    pub depth_d: S,
    pub betas: Vec<f64>,
    #[serde(default)]
    pub noisy: bool,
    #[serde(default = "default_rate_range")]
    pub noise_rate_range: [f64; 2],
    #[serde(default = "default_p_star")]
    pub p_star: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_loss_stop")]
    pub loss_stop: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub noise_redraw: NoiseRedraw,
    #[serde(default)]
    pub gradient: GradientScheme,
    /// Worker thread limit; `None` uses all cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Store measured wall times. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_timing: bool,
}

pub type SweepConfig = ExperimentConfig<Vec<usize>>;

fn default_rate_range() -> [f64; 2] {
    [1e-3, 2e-3]
}

fn default_p_star() -> f64 {
    DEFAULT_P_STAR
}

fn default_restarts() -> usize {
    10
}

fn default_max_steps() -> usize {
    2000
}

fn default_loss_stop() -> f64 {
    1e-3
}

impl ExperimentConfig {
    /// Defaults for everything except the required fields.
    pub fn new(model: ModelSpec, n: usize, depth_d: usize, betas: Vec<f64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model,
            n,
            depth_d,
            betas,
            noisy: false,
            noise_rate_range: default_rate_range(),
            p_star: default_p_star(),
            restarts: default_restarts(),
            max_steps: default_max_steps(),
            loss_stop: default_loss_stop(),
            master_seed: 0,
            noise_redraw: NoiseRedraw::default(),
            gradient: GradientScheme::default(),
            workers: None,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        build_layout(self.n, self.depth_d).map_err(|e| Error::config("n", e.to_string()))?;
        Ok(())
    }

    pub fn optimizer(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_steps: self.max_steps,
            loss_stop: self.loss_stop,
            adam: AdamConfig::default(),
            gradient: self.gradient,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if self.n.is_empty() {
            return Err(Error::config("n", "list is empty"));
        }
        if self.depth_d.is_empty() {
            return Err(Error::config("depth_d", "list is empty"));
        }
        for p in self.points() {
            p.validate()?;
        }
        Ok(())
    }

    /// One experiment per `(n, depth_d)` combination.
    pub fn points(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &depth_d in &self.depth_d {
                out.push(ExperimentConfig {
                    schema_version: self.schema_version,
                    model: self.model,
                    n,
                    depth_d,
                    betas: self.betas.clone(),
                    noisy: self.noisy,
                    noise_rate_range: self.noise_rate_range,
                    p_star: self.p_star,
                    restarts: self.restarts,
                    max_steps: self.max_steps,
                    loss_stop: self.loss_stop,
                    master_seed: self.master_seed,
                    noise_redraw: self.noise_redraw,
                    gradient: self.gradient,
                    workers: self.workers,
                    record_timing: self.record_timing,
                });
            }
        }
        out
    }
}

impl<S> ExperimentConfig<S> {
    fn validate_common(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        match self.model {
            ModelSpec::Random { count: 0, .. } => return Err(Error::config("model.count", "must be at least 1")),
            ModelSpec::Tfi { h } | ModelSpec::Xy { h, .. } if !h.is_finite() => {
                return Err(Error::config("model.h", "must be finite"))
            }
            ModelSpec::Xy { gamma, .. } if !gamma.is_finite() => {
                return Err(Error::config("model.gamma", "must be finite"))
            }
            _ => {}
        }
        if self.betas.is_empty() {
            return Err(Error::config("betas", "list is empty"));
        }
        if let Some(b) = self.betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(Error::config("betas", format!("{b} is not a non-negative number")));
        }
        let [lo, hi] = self.noise_rate_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::config("noise_rate_range", format!("[{lo}, {hi}] is not inside [0, 1]")));
        }
        if !(self.p_star > 0.0 && self.p_star <= 1.0) {
            return Err(Error::config("p_star", format!("{} is not in (0, 1]", self.p_star)));
        }
        if self.restarts == 0 {
            return Err(Error::config("restarts", "must be at least 1"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps", "must be at least 1"));
        }
        if !(self.loss_stop.is_finite() && self.loss_stop >= 0.0) {
            return Err(Error::config("loss_stop", "must be a non-negative number"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        match self.gradient {
            GradientScheme::CentralFd { h } | GradientScheme::ForwardFd { h } if !(h > 0.0 && h.is_finite()) => {
                Err(Error::config("gradient.h", "must be positive"))
            }
            _ => Ok(()),
        }
    }
}

impl<S: serde::de::DeserializeOwned> ExperimentConfig<S> {
    fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }
}

/// Parse and validate an experiment file.
pub fn parse_experiment(text: &str) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::<usize>::parse(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    parse_experiment(&fs::read_to_string(path)?)
}

/// Parse and validate a sweep file (lists for `n` and `depth_d`).
pub fn parse_sweep(text: &str) -> Result<SweepConfig> {
    let cfg = SweepConfig::parse(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_sweep(path: &Path) -> Result<SweepConfig> {
    parse_sweep(&fs::read_to_string(path)?)
}

/// Independent `U[lo, hi]` dephasing and damping rates for each qubit.
pub fn sample_noise_model(n: usize, range: [f64; 2], p_star: f64, rng: &mut impl Rng) -> Result<NoiseModel> {
    let [lo, hi] = range;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidArgument(format!("rate range [{lo}, {hi}] is not inside [0, 1]")));
    }
    let mut draw = || -> Vec<f64> { (0..n).map(|_| rng.random_range(lo..=hi)).collect() };
    let lambda = draw();
    let omega = draw();
    NoiseModel::new(lambda, omega, p_star)
}

fn noise_for(cfg: &ExperimentConfig, seed: u64) -> Result<NoiseModel> {
    if !cfg.noisy {
        return Ok(NoiseModel::noiseless());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, NOISE_STREAM));
    sample_noise_model(cfg.n, cfg.noise_rate_range, cfg.p_star, &mut rng)
}

/// A restart index or the best-of-k summary row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Restart {
    Index(usize),
    Best,
}

impl fmt::Display for Restart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Restart::Index(i) => write!(f, "{i}"),
            Restart::Best => f.write_str("best"),
        }
    }
}

impl From<Restart> for String {
    fn from(r: Restart) -> Self {
        r.to_string()
    }
}

impl TryFrom<String> for Restart {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        if s == "best" {
            return Ok(Restart::Best);
        }
        s.parse().map(Restart::Index).map_err(|_| format!("invalid restart `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: ModelDescriptor,
    pub n: usize,
    pub depth: usize,
    pub beta: f64,
    pub noisy: bool,
    pub seed: u64,
    pub restart: Restart,
    pub fidelity: f64,
    pub steps: usize,
    pub termination: Termination,
    pub wall_seconds: f64,
    pub noise: NoiseModel,
    pub params: Vec<f64>,
}

impl ResultRow {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.model
            .to_string()
            .cmp(&other.model.to_string())
            .then(self.n.cmp(&other.n))
            .then(self.depth.cmp(&other.depth))
            .then(self.beta.total_cmp(&other.beta))
            .then(self.noisy.cmp(&other.noisy))
            .then(self.restart.cmp(&other.restart))
    }
}

/// Sort rows by `(model, n, D, beta, noisy, restart)`, best rows last.
pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(ResultRow::sort_key_cmp);
}

struct Point {
    model: ModelDescriptor,
    beta: f64,
    seed: u64,
    target: GibbsTarget,
}

/// Worker count after applying the `DVQA_WORKERS` cap.
pub fn effective_workers(requested: Option<usize>) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut workers = requested.unwrap_or(available);
    if let Some(cap) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        workers = workers.min(cap.max(1));
    }
    workers.max(1)
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_workers(workers))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Run every `(instance, beta)` point with `restarts` seeded optimizations
/// each. Returns one row per restart plus one `best` row per point, sorted.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    with_pool(cfg.workers, || run_points(cfg))?
}

/// Run each `(n, D)` combination of a sweep and merge the rows.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for point in cfg.points() {
        rows.extend(run_experiment(&point)?);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

fn run_points(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let layout = build_layout(cfg.n, cfg.depth_d)?;
    let optimizer = cfg.optimizer();
    let specs: Vec<(u64, ModelDescriptor, u64, f64)> = cfg
        .model
        .instances()
        .into_iter()
        .enumerate()
        .flat_map(|(k, model)| {
            let instance_seed = split_seed(cfg.master_seed, k as u64);
            cfg.betas
                .iter()
                .enumerate()
                .map(move |(b, &beta)| (instance_seed, model, b as u64, beta))
        })
        .collect();
    let points = specs
        .into_par_iter()
        .map(|(instance_seed, model, b, beta)| {
            let target = gibbs_state(&model.build(cfg.n)?, beta)?;
            Ok(Point {
                model,
                beta,
                seed: split_seed(instance_seed, b),
                target,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.restarts).map(move |r| (p, r)))
        .collect();
    let mut runs = jobs
        .into_par_iter()
        .map(|(p, r)| {
            let point = &points[p];
            let seed = split_seed(point.seed, r as u64);
            let noise = match cfg.noise_redraw {
                NoiseRedraw::PerPoint => noise_for(cfg, point.seed)?,
                NoiseRedraw::PerRestart => noise_for(cfg, seed)?,
            };
            let ctx = LossContext::new(layout.clone(), noise, point.target.clone())?;
            let run = optimize_run(&ctx, seed, &optimizer)?;
            Ok(ResultRow {
                model: point.model,
                n: cfg.n,
                depth: cfg.depth_d,
                beta: point.beta,
                noisy: cfg.noisy,
                seed,
                restart: Restart::Index(r),
                fidelity: run.final_fidelity.clamp(0.0, 1.0),
                steps: run.steps_used,
                termination: run.termination,
                wall_seconds: if cfg.record_timing { run.wall_seconds } else { 0.0 },
                noise: run.noise,
                params: run.final_params,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(runs.len() + points.len());
    for chunk in runs.chunks_mut(cfg.restarts) {
        let best = chunk
            .iter()
            .fold(&chunk[0], |best, r| if r.fidelity > best.fidelity { r } else { best });
        let best_row = ResultRow {
            restart: Restart::Best,
            ..best.clone()
        };
        rows.extend(chunk.iter().cloned());
        rows.push(best_row);
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// Recompute a row's fidelity from its stored parameters and noise.
pub fn audit_row(row: &ResultRow) -> Result<f64> {
    let layout = build_layout(row.n, row.depth)?;
    let target = gibbs_state(&row.model.build(row.n)?, row.beta)?;
    let ctx = LossContext::new(layout.clone(), row.noise.clone(), target)?;
    let params = ParameterVector::from_values(&layout, row.params.clone(), row.noise.p_cap())?;
    let loss = crate::optimize::infidelity(&ctx, &params)?;
    Ok((1.0 - loss).clamp(0.0, 1.0))
}

pub fn write_csv(rows: &[ResultRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.model.to_string(),
            r.n.to_string(),
            r.depth.to_string(),
            r.beta.to_string(),
            r.noisy.to_string(),
            r.seed.to_string(),
            r.restart.to_string(),
            r.fidelity.to_string(),
            r.steps.to_string(),
            r.termination.to_string(),
            r.wall_seconds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl(rows: &[ResultRow], mut out: impl Write) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl(input: impl std::io::Read) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for line in BufReader::new(input).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line)?);
        }
    }
    Ok(rows)
}

pub const JSONL_NAME: &str = "results.jsonl";
pub const CSV_NAME: &str = "results.csv";

/// Write `results.jsonl` and `results.csv` into `dir`, creating it if needed.
pub fn write_results(dir: &Path, rows: &[ResultRow]) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let jsonl = dir.join(JSONL_NAME);
    let csv_path = dir.join(CSV_NAME);
    write_jsonl(rows, BufWriter::new(fs::File::create(&jsonl)?))?;
    write_csv(rows, BufWriter::new(fs::File::create(&csv_path)?))?;
    Ok((jsonl, csv_path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Model,
    N,
    Depth,
    Beta,
    Noisy,
}

impl GroupKey {
    pub fn name(&self) -> &'static str {
        match self {
            GroupKey::Model => "model",
            GroupKey::N => "n",
            GroupKey::Depth => "D",
            GroupKey::Beta => "beta",
            GroupKey::Noisy => "noisy",
        }
    }

    fn value(&self, row: &ResultRow) -> KeyValue {
        match self {
            GroupKey::Model => KeyValue::Text(row.model.to_string()),
            GroupKey::N => KeyValue::Int(row.n),
            GroupKey::Depth => KeyValue::Int(row.depth),
            GroupKey::Beta => KeyValue::Real(row.beta),
            GroupKey::Noisy => KeyValue::Flag(row.noisy),
        }
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "model" => Ok(GroupKey::Model),
            "n" => Ok(GroupKey::N),
            "D" | "d" | "depth" => Ok(GroupKey::Depth),
            "beta" => Ok(GroupKey::Beta),
            "noisy" => Ok(GroupKey::Noisy),
            other => Err(Error::InvalidArgument(format!("unknown group key `{other}`"))),
        }
    }
}

/// Parse a comma-separated key list such as `D,beta`.
pub fn parse_group_keys(s: &str) -> Result<Vec<GroupKey>> {
    s.split(',').filter(|k| !k.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq)]
enum KeyValue {
    Text(String),
    Int(usize),
    Real(f64),
    Flag(bool),
}

impl KeyValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (KeyValue::Text(a), KeyValue::Text(b)) => a.cmp(b),
            (KeyValue::Int(a), KeyValue::Int(b)) => a.cmp(b),
            (KeyValue::Real(a), KeyValue::Real(b)) => a.total_cmp(b),
            (KeyValue::Flag(a), KeyValue::Flag(b)) => a.cmp(b),
            _ => Ordering::Equal,
        }
    }
}

impl fmt::Display for KeyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyValue::Text(s) => f.write_str(s),
            KeyValue::Int(v) => write!(f, "{v}"),
            KeyValue::Real(v) => write!(f, "{v}"),
            KeyValue::Flag(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stat {
    Best,
    Median,
    Std,
}

impl Stat {
    pub fn name(&self) -> &'static str {
        match self {
            Stat::Best => "best",
            Stat::Median => "median",
            Stat::Std => "std",
        }
    }

    fn apply(&self, values: &mut [f64]) -> f64 {
        match self {
            Stat::Best => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Stat::Median => {
                values.sort_by(f64::total_cmp);
                let m = values.len() / 2;
                if values.len() % 2 == 1 {
                    values[m]
                } else {
                    0.5 * (values[m - 1] + values[m])
                }
            }
            Stat::Std => {
                if values.len() < 2 {
                    return 0.0;
                }
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            }
        }
    }
}

impl FromStr for Stat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "best" => Ok(Stat::Best),
            "median" => Ok(Stat::Median),
            "std" => Ok(Stat::Std),
            other => Err(Error::InvalidArgument(format!("unknown statistic `{other}`"))),
        }
    }
}

/// Aggregated fidelity table, one row per distinct group.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// The aggregated statistic of each row, unformatted.
    pub values: Vec<f64>,
}

impl PlotTable {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Aggregate fidelities by `group_by`. When best-of-k summary rows are
/// present only they are used; otherwise every row counts.
pub fn emit_plot_data(rows: &[ResultRow], group_by: &[GroupKey], stat: Stat) -> Result<PlotTable> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to aggregate".into()));
    }
    let has_best = rows.iter().any(|r| r.restart == Restart::Best);
    let mut groups: Vec<(Vec<KeyValue>, Vec<f64>)> = Vec::new();
    for row in rows.iter().filter(|r| !has_best || r.restart == Restart::Best) {
        let key: Vec<KeyValue> = group_by.iter().map(|g| g.value(row)).collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(row.fidelity),
            None => groups.push((key, vec![row.fidelity])),
        }
    }
    groups.sort_by(|(a, _), (b, _)| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    });

    let mut columns: Vec<String> = group_by.iter().map(|g| g.name().to_string()).collect();
    columns.push("count".into());
    columns.push(format!("fidelity_{}", stat.name()));
    let mut table = PlotTable {
        columns,
        rows: Vec::with_capacity(groups.len()),
        values: Vec::with_capacity(groups.len()),
    };
    for (key, mut values) in groups {
        let v = stat.apply(&mut values);
        let mut line: Vec<String> = key.iter().map(ToString::to_string).collect();
        line.push(values.len().to_string());
        line.push(v.to_string());
        table.rows.push(line);
        table.values.push(v);
    }
    Ok(table)
}

/// Trajectory sampler versus exact density-matrix evolution at one random
/// parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub n: usize,
    pub depth: usize,
    pub noisy: bool,
    pub samples: usize,
    /// Number of noiseless branches, when small enough to enumerate.
    pub branches: Option<usize>,
    /// Max entry difference between the branch mixture and exact evolution.
    pub enumeration_error: Option<f64>,
    pub monte_carlo_trace_distance: f64,
    pub monte_carlo_std_error: f64,
}

pub fn validate_trajectories(cfg: &ExperimentConfig, samples: usize) -> Result<TrajectoryReport> {
    cfg.validate()?;
    let layout = build_layout(cfg.n, cfg.depth_d)?;
    let seed = split_seed(cfg.master_seed, TRAJECTORY_STREAM);
    let noise = noise_for(cfg, seed)?;
    let params = init_parameters(&layout, seed, noise.p_cap());
    let exact = evolve(&layout, &params, &noise, &DensityMatrix::zero_state(cfg.n))?;

    let (branches, enumeration_error) = if !cfg.noisy && layout.reset_count() <= MAX_ENUMERATED_RESETS {
        let b = enumerate_branches(&layout, &params)?;
        let mixture = branch_mixture(&b)?;
        (Some(b.len()), Some(mixture.max_abs_diff(&exact)))
    } else {
        (None, None)
    };
    let (estimate, std_error) = with_pool(cfg.workers, || estimate_density(&layout, &params, &noise, samples, seed))??;
    Ok(TrajectoryReport {
        n: cfg.n,
        depth: cfg.depth_d,
        noisy: cfg.noisy,
        samples,
        branches,
        enumeration_error,
        monte_carlo_trace_distance: trace_distance(&estimate, &exact)?,
        monte_carlo_std_error: std_error,
    })
}
