//! `simulate`: run the configured experiments and write the artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use smbparse::estimator::{
    convergence_experiment, counterexample_experiment, perturbation_experiment, ConvergenceReport,
    CounterexampleReport, EstimatorRecord,
};
use smbparse::measures::{ProcessModel, RNG_ALGORITHM};

use crate::config::{Experiment, ExperimentConfig};
use crate::format::{round12, write_results};
use crate::CliError;

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const SEED_DERIVATION: &str = "derive_seed(master, i) = splitmix64(master + (i + 1) * 0x9E3779B97F4A7C15), wrapping";

/// One experiment as recorded in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentEntry {
    pub index: usize,
    pub kind: String,
    pub label: String,
    pub pass: bool,
    /// Half-open range of data rows in the results CSV.
    pub rows: (usize, usize),
    pub oracle: Value,
    pub statistics: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_sha256: String,
    pub model_id: String,
    pub rng_algorithm: String,
    pub seed_derivation: String,
    pub seeds: Vec<u64>,
    pub n_grid: Vec<usize>,
    pub workers: usize,
    pub experiments: Vec<ExperimentEntry>,
    pub pass: bool,
    /// sha256 of every emitted artifact other than the manifest.
    pub artifacts: Vec<(String, String)>,
    /// Wall-clock seconds per phase.
    pub timings: Vec<(String, f64)>,
}

pub struct SimulateArgs {
    pub config: PathBuf,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub struct Outcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn convergence_entry(report: &ConvergenceReport) -> (Value, Value) {
    let oracle = json!(report
        .oracles
        .iter()
        .map(|o| json!({
            "model_id": o.model_id,
            "rate_lower": round12(o.rate.lower),
            "rate_upper": round12(o.rate.upper),
            "rate_converged": o.rate.converged,
            "fixed_limit": o.fixed.map(|(_, v)| round12(v)),
            "split_limit": o.split.map(|t| round12(t.value)),
        }))
        .collect::<Vec<_>>());
    let stats = json!({
        "mode": report.mode,
        "tolerance": round12(report.tolerance),
        "effective_tolerance": round12(report.effective_tolerance),
        "tail_deviation": round12(report.tail_deviation),
        "l1_deviation": round12(report.l1_deviation),
        "l1_sigma": round12(report.l1_sigma),
    });
    (oracle, stats)
}

fn counterexample_entry(report: &CounterexampleReport) -> (Value, Value) {
    let g = &report.gap;
    let oracle = json!({
        "k": g.k,
        "fixed_limit": round12(g.fixed_limit),
        "split_limit": round12(g.split_limit),
        "gap": round12(g.gap),
        "rate_lower": round12(g.rate.lower),
        "rate_upper": round12(g.rate.upper),
    });
    let stats = json!({
        "epsilon_schedule": report.epsilon_schedule,
        "even_avg": round12(report.even_avg),
        "odd_avg": round12(report.odd_avg),
        "observed_gap": round12(report.observed_gap()),
        "even_tolerance": round12(report.even_tolerance),
        "odd_tolerance": round12(report.odd_tolerance),
        "even_pass": report.even_pass,
        "odd_pass": report.odd_pass,
        "gap_pass": report.gap_pass,
    });
    (oracle, stats)
}

fn single_seed(seeds: &[u64], kind: &str) -> Result<u64, CliError> {
    match seeds {
        [s] => Ok(*s),
        _ => Err(CliError::Precondition(format!(
            "{kind} experiments follow one trajectory, got {} seeds",
            seeds.len()
        ))),
    }
}

struct ExperimentOutput {
    label: String,
    pass: bool,
    rows: Vec<(EstimatorRecord, String)>,
    oracle: Value,
    statistics: Value,
}

fn run_experiment(
    model: &ProcessModel,
    experiment: &Experiment,
    grid: &[usize],
    seeds: &[u64],
) -> Result<ExperimentOutput, CliError> {
    let with_params = |records: Vec<EstimatorRecord>, suffix: &str| -> Vec<(EstimatorRecord, String)> {
        records
            .into_iter()
            .map(|r| {
                let params = r.parser.params() + suffix;
                (r, params)
            })
            .collect()
    };
    Ok(match experiment {
        Experiment::Convergence { parser, mode, tolerance } => {
            let report = convergence_experiment(model, parser, grid, seeds, *mode, *tolerance)?;
            let (oracle, statistics) = convergence_entry(&report);
            ExperimentOutput {
                label: parser.label(),
                pass: report.pass,
                rows: with_params(report.series, ""),
                oracle,
                statistics,
            }
        }
        Experiment::Perturbation { parser, plan, tolerance } => {
            let seed = single_seed(seeds, "perturbation")?;
            let report = perturbation_experiment(model, parser, plan, grid, seed, *tolerance)?;
            let (oracle, statistics) = convergence_entry(&report);
            let suffix = format!(";perturbation={}", plan.label());
            ExperimentOutput {
                label: format!("{}+{}", parser.label(), plan.label()),
                pass: report.pass,
                rows: with_params(report.series, &suffix),
                oracle,
                statistics,
            }
        }
        Experiment::Counterexample {
            k,
            epsilon_schedule,
            resolution,
            tolerance,
        } => {
            let seed = single_seed(seeds, "counterexample")?;
            let report = counterexample_experiment(model, *k, epsilon_schedule, grid, seed, *resolution, *tolerance)?;
            let (oracle, statistics) = counterexample_entry(&report);
            ExperimentOutput {
                label: format!("counterexample_w[k={k}]"),
                pass: report.pass,
                rows: with_params(report.series, ""),
                oracle,
                statistics,
            }
        }
    })
}

pub fn worker_count(flag: Option<usize>, config: Option<usize>) -> usize {
    flag.or(config)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let mut timings = Vec::new();
    let started = Instant::now();
    let text = fs::read(&args.config)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", args.config.display())))?;
    let config_sha256 = sha256_hex(&text);
    let text = String::from_utf8(text)
        .map_err(|_| CliError::Config(format!("{} is not UTF-8", args.config.display())))?;
    let config = ExperimentConfig::parse(&text, &args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let model = config.load_model(base)?;
    let validation = model.validate();
    if !validation.passed() {
        return Err(CliError::Invariant(validation.to_string()));
    }
    let grid = config.n_grid.values()?;
    let seeds = config.seeds.values()?;
    let workers = worker_count(args.workers, config.workers);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    timings.push(("load".to_owned(), started.elapsed().as_secs_f64()));

    let mut rows = Vec::new();
    let mut experiments = Vec::new();
    for (index, experiment) in config.experiments.iter().enumerate() {
        let t = Instant::now();
        let output = pool.install(|| run_experiment(&model, experiment, &grid, &seeds))?;
        let start = rows.len();
        rows.extend(output.rows);
        experiments.push(ExperimentEntry {
            index,
            kind: experiment.kind().to_owned(),
            label: output.label,
            pass: output.pass,
            rows: (start, rows.len()),
            oracle: output.oracle,
            statistics: output.statistics,
        });
        timings.push((format!("experiment[{index}]"), t.elapsed().as_secs_f64()));
    }

    let t = Instant::now();
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("smbparse-out"));
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(format!("creating {}: {e}", out_dir.display())))?;
    let mut csv_bytes = Vec::new();
    write_results(&mut csv_bytes, &rows)?;
    let pass = experiments.iter().all(|e| e.pass);
    let summary = json!({
        "config_sha256": config_sha256,
        "model_id": model.id(),
        "pass": pass,
        "experiments": experiments,
    });
    let summary_bytes = serde_json::to_vec_pretty(&summary)?;
    write_file(&out_dir.join(RESULTS_FILE), &csv_bytes)?;
    write_file(&out_dir.join(SUMMARY_FILE), &summary_bytes)?;
    timings.push(("write".to_owned(), t.elapsed().as_secs_f64()));

    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        config_sha256,
        model_id: model.id().to_owned(),
        rng_algorithm: RNG_ALGORITHM.to_owned(),
        seed_derivation: SEED_DERIVATION.to_owned(),
        seeds,
        n_grid: grid,
        workers,
        experiments,
        pass,
        artifacts: vec![
            (RESULTS_FILE.to_owned(), sha256_hex(&csv_bytes)),
            (SUMMARY_FILE.to_owned(), sha256_hex(&summary_bytes)),
        ],
        timings,
    };
    write_file(&out_dir.join(MANIFEST_FILE), &serde_json::to_vec_pretty(&manifest)?)?;
    Ok(Outcome { out_dir, manifest })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}
