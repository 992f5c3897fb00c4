//! `report`: plot-ready tables from a finished run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::simulate::{write_file, RunManifest, MANIFEST_FILE, RESULTS_FILE};
use crate::CliError;

pub const PLOT_DIR: &str = "plots";

fn file_stem(index: usize, model: &str, label: &str) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
            .collect()
    };
    format!("{index:02}_{}_{}", clean(model), clean(label))
}

/// Writes one TSV per experiment into `<dir>/plots` and returns their paths.
pub fn report(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::Manifest(format!("{}: {e}", manifest_path.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Manifest(format!("{}: {e}", manifest_path.display())))?;
    let mut reader = csv::Reader::from_path(dir.join(RESULTS_FILE))
        .map_err(|e| CliError::Manifest(format!("{}: {e}", dir.join(RESULTS_FILE).display())))?;
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>()?;

    let plots = dir.join(PLOT_DIR);
    fs::create_dir_all(&plots).map_err(|e| CliError::Io(format!("creating {}: {e}", plots.display())))?;
    let mut written = Vec::new();
    for e in &manifest.experiments {
        let (start, end) = e.rows;
        let slice = rows
            .get(start..end)
            .ok_or_else(|| CliError::Manifest(format!("experiment {} rows {start}..{end} missing", e.index)))?;
        let mut out = String::new();
        // columns: 0 N, 1 seed, 4 blockwise_info, 5 smb_info, 7 c_over_N, 8 target
        if e.kind == "counterexample" {
            let fixed = e.oracle["fixed_limit"].as_f64().unwrap_or(f64::NAN);
            let split = e.oracle["split_limit"].as_f64().unwrap_or(f64::NAN);
            out.push_str("series\tN\testimate\toracle_even\toracle_odd\n");
            for parity in ["even", "odd"] {
                for r in slice {
                    let n: u64 = r[0].parse().map_err(|_| CliError::Manifest(format!("bad N {:?}", &r[0])))?;
                    if n.is_multiple_of(2) == (parity == "even") {
                        writeln!(out, "{parity}\t{}\t{}\t{fixed}\t{split}", &r[0], &r[4]).expect("string write");
                    }
                }
            }
        } else {
            out.push_str("N\tseed\testimate\tsmb_info\ttarget\tc_over_N\n");
            for r in slice {
                writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}", &r[0], &r[1], &r[4], &r[5], &r[8], &r[7]).expect("string write");
            }
        }
        let path = plots.join(format!("{}.tsv", file_stem(e.index, &manifest.model_id, &e.label)));
        write_file(&path, out.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
