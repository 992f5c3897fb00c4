use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smbparse::measures::load_model;
use smbparse::verify::{default_models, run_suite, Suite, VerifierRecord, VERIFIER_COLUMNS};

mod config;
mod format;
mod report;
mod simulate;

use format::sig12;

/// Exit codes: 0 pass, 2 invariant failure, 3 experiment precondition
/// failure, 4 I/O, configuration or manifest error.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("config: {0}")]
    Config(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error(transparent)]
    Core(#[from] smbparse::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use smbparse::Error as E;
        match self {
            CliError::Invariant(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Core(E::InvalidModel(_) | E::OutOfSupport) => 2,
            CliError::Core(E::Io(_) | E::ModelFile { .. }) => 4,
            CliError::Core(_) => 3,
            CliError::Io(_) | CliError::Config(_) | CliError::Manifest(_) | CliError::Csv(_) | CliError::Json(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "smbparse", version, about = "Blockwise information estimators and martingale checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run exact-enumeration invariant checks and print a residual table.
    Verify {
        #[arg(long, default_value = "all", value_parser = parse_suite)]
        suite: Suite,
        /// Model JSON to check instead of the bundled reference models.
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the experiments of a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "SMBPARSE_WORKERS")]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write plot-data tables for a finished run directory.
    Report { dir: PathBuf },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: smbparse::Error| e.to_string())
}

fn print_table(records: &[VerifierRecord]) {
    let width = records.iter().map(|r| r.check_name.len()).max().unwrap_or(10).max(10);
    let model_width = records.iter().map(|r| r.model_id.len()).max().unwrap_or(5).max(5);
    println!("{:<width$}  {:<model_width$}  {:>18}  {:>18}  {:<4}  parameters", "check", "model", "residual", "bound", "pass");
    for r in records {
        println!(
            "{:<width$}  {:<model_width$}  {:>18}  {:>18}  {:<4}  {}",
            r.check_name,
            r.model_id,
            sig12(r.residual),
            sig12(r.bound),
            if r.pass { "ok" } else { "FAIL" },
            r.parameters
        );
    }
}

fn write_verifier_csv(path: &PathBuf, records: &[VerifierRecord]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(VERIFIER_COLUMNS)?;
    for r in records {
        w.write_record([
            r.check_name.clone(),
            r.model_id.clone(),
            r.parameters.clone(),
            sig12(r.residual),
            sig12(r.bound),
            r.pass.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

fn verify(suite: Suite, models: &[PathBuf], csv_path: Option<&PathBuf>) -> Result<bool, CliError> {
    let models = if models.is_empty() {
        default_models()
    } else {
        models.iter().map(|p| load_model(p)).collect::<Result<Vec<_>, _>>()?
    };
    let records = run_suite(suite, &models);
    print_table(&records);
    if let Some(path) = csv_path {
        write_verifier_csv(path, &records)?;
    }
    let failed = records.iter().filter(|r| !r.pass).count();
    println!("{} checks, {failed} failed", records.len());
    Ok(failed == 0)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Verify { suite, models, csv } => verify(suite, &models, csv.as_ref()),
        Command::Simulate { config, workers, out } => {
            let outcome = simulate::simulate(&simulate::SimulateArgs { config, workers, out })?;
            for e in &outcome.manifest.experiments {
                println!("{} {} {}", if e.pass { "PASS" } else { "FAIL" }, e.kind, e.label);
            }
            println!("artifacts written to {}", outcome.out_dir.display());
            Ok(outcome.manifest.pass)
        }
        Command::Report { dir } => {
            for path in report::report(&dir)? {
                println!("{}", path.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(4);
        }
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
