//! Number formatting and results-table emission.

use std::io::Write;

use smbparse::estimator::EstimatorRecord;

use crate::CliError;

/// Column headers of the results CSV; `[estimate]` marks Monte Carlo values
/// and `[oracle]` marks enumeration or closed-form values.
pub const RESULT_COLUMNS: [&str; 10] = [
    "N",
    "seed",
    "parser_family",
    "parser_params",
    "blockwise_info[estimate]",
    "smb_info[estimate]",
    "residual[estimate]",
    "c_over_N[estimate]",
    "target[oracle]",
    "deviation[estimate]",
];

/// `x` with 12 significant digits: positional for exponents in `-5..12`,
/// scientific otherwise.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        format!("{x:.*}", (11 - exp) as usize)
    } else {
        sci
    }
}

/// Rounds to 12 significant digits, for JSON output.
pub fn round12(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.11e}").parse().expect("round trip")
    } else {
        x
    }
}

pub fn write_results<W: Write>(out: W, rows: &[(EstimatorRecord, String)]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(RESULT_COLUMNS)?;
    for (r, params) in rows {
        w.write_record([
            r.n.to_string(),
            r.seed.to_string(),
            r.parser.family().to_owned(),
            params.clone(),
            sig12(r.blockwise_info),
            sig12(r.smb_info),
            sig12(r.residual),
            sig12(r.c_over_n),
            sig12(r.target),
            sig12(r.deviation),
        ])?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}
