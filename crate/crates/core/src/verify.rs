//! Exact-enumeration verification suites over a set of models.
//!
//! Each check yields a [`VerifierRecord`]; a suite passes when every record
//! does. Models that fail validation are reported and skipped by the
//! remaining checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::martingale::{
    chain_rule_decomposition, expected_logz_check, truncated_decomposition, verify_martingale_property, z_trace,
    zmax_tail_check, DECOMPOSITION_TOL, IDENTITY_TOL,
};
use crate::measures::{
    beta_sequence, check_cap, default_entropy_rate, log_prob_unchecked, reference, sample_trajectory, walk_cylinders,
    ProcessModel, Source, ENUMERATION_CAP,
};
use crate::numeric::CompensatedSum;
use crate::parsing::{
    check_perturbation, validate_parsing, Budget, GrowthSchedule, ParseInput, ParserSpec, PerturbationPlan,
};

/// Column order of the verifier CSV.
pub const VERIFIER_COLUMNS: [&str; 6] = ["check_name", "model_id", "parameters", "residual", "bound", "pass"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifierRecord {
    pub check_name: String,
    pub model_id: String,
    pub parameters: String,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
}

impl VerifierRecord {
    fn new(check: &str, model: &ProcessModel, parameters: String, residual: f64, bound: f64) -> Self {
        Self {
            check_name: check.to_owned(),
            model_id: model.id().to_owned(),
            parameters,
            residual,
            bound,
            pass: residual <= bound,
        }
    }

    fn failed(check: &str, model: &ProcessModel, parameters: String, err: &Error) -> Self {
        Self {
            check_name: check.to_owned(),
            model_id: model.id().to_owned(),
            parameters: format!("{parameters} error={err}"),
            residual: f64::INFINITY,
            bound: 0.0,
            pass: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Measures,
    Martingale,
    Parsing,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 4] = ["measures", "martingale", "parsing", "all"];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Measures => "measures",
            Suite::Martingale => "martingale",
            Suite::Parsing => "parsing",
            Suite::All => "all",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "measures" => Ok(Suite::Measures),
            "martingale" => Ok(Suite::Martingale),
            "parsing" => Ok(Suite::Parsing),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidParameter(format!(
                "unknown suite {s:?}, expected one of {:?}",
                Suite::NAMES
            ))),
        }
    }
}

/// The three reference sources the suites run on by default.
pub fn default_models() -> Vec<ProcessModel> {
    vec![reference::iid_uniform_binary(), reference::m1(), reference::h1()]
}

/// Runs `suite` on every model; validation records always come first.
pub fn run_suite(suite: Suite, models: &[ProcessModel]) -> Vec<VerifierRecord> {
    let mut out = Vec::new();
    for model in models {
        let report = model.validate();
        for c in &report.checks {
            out.push(VerifierRecord {
                check_name: format!("validate.{}", c.name),
                model_id: model.id().to_owned(),
                parameters: String::new(),
                residual: c.residual,
                bound: c.tolerance,
                pass: c.pass,
            });
        }
        if !report.passed() {
            continue;
        }
        if matches!(suite, Suite::Measures | Suite::All) {
            measures_checks(model, &mut out);
        }
        if matches!(suite, Suite::Martingale | Suite::All) {
            martingale_checks(model, &mut out);
        }
        if matches!(suite, Suite::Parsing | Suite::All) {
            parsing_checks(model, &mut out);
        }
    }
    out
}

/// Deepest `n` with `|A|^n` atoms under `limit` (at most `n_max`).
fn depth_for(model: &ProcessModel, n_max: usize, limit: u64) -> usize {
    let size = model.alphabet().size();
    (1..=n_max)
        .take_while(|&n| check_cap(size, n, limit.min(ENUMERATION_CAP)).is_ok())
        .last()
        .unwrap_or(1)
}

fn record(out: &mut Vec<VerifierRecord>, check: &str, model: &ProcessModel, params: String, bound: f64, r: Result<f64>) {
    out.push(match r {
        Ok(residual) => VerifierRecord::new(check, model, params, residual, bound),
        Err(e) => VerifierRecord::failed(check, model, params, &e),
    });
}

fn measures_checks(model: &ProcessModel, out: &mut Vec<VerifierRecord>) {
    let n = depth_for(model, 8, 1 << 16);
    record(out, "measures.normalization", model, format!("n={n}"), 1e-12, {
        let mut total = CompensatedSum::default();
        walk_cylinders(model, n, |word, lp| {
            if word.len() == n {
                total.add(lp.exp());
            }
        })
        .map(|()| (total.value() - 1.0).abs())
    });
    let n = depth_for(model, 6, 1 << 14).max(2);
    record(out, "measures.kolmogorov_consistency", model, format!("n={n}"), 1e-12, {
        let size = model.alphabet().size();
        let mut worst = 0.0f64;
        walk_cylinders(model, n - 1, |word, lp| {
            let mut ext = word.to_vec();
            ext.push(0);
            let mut sum = CompensatedSum::default();
            for a in 0..size {
                *ext.last_mut().expect("non-empty") = a as u8;
                sum.add(log_prob_unchecked(model, &ext).exp());
            }
            worst = worst.max((sum.value() - lp.exp()).abs());
        })
        .map(|()| worst)
    });
    let n = depth_for(model, 10, 1 << 12);
    record(out, "measures.beta_monotone", model, format!("n_max={n}"), 1e-12, {
        beta_sequence(model, n).map(|b| b.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max))
    });
    record(out, "measures.entropy_rate_bracket", model, String::new(), 1e-4, {
        default_entropy_rate(model).map(|b| b.width().max(if b.lower <= b.upper { 0.0 } else { f64::INFINITY }))
    });
}

fn martingale_checks(model: &ProcessModel, out: &mut Vec<VerifierRecord>) {
    let n = depth_for(model, 8, 1 << 16);
    record(out, "martingale.property", model, format!("n={n}"), IDENTITY_TOL, verify_martingale_property(model, n));
    for k in 1..=n {
        record(out, "martingale.expected_log_z", model, format!("n={k}"), IDENTITY_TOL, {
            expected_logz_check(model, k).map(|c| c.residual)
        });
    }
    let n = depth_for(model, 10, 1 << 16);
    match zmax_tail_check(model, n, &[1.5, 2.0, 3.0, 5.0]) {
        Ok(rows) => {
            for row in rows {
                out.push(VerifierRecord::new(
                    "martingale.zmax_tail",
                    model,
                    format!("n={n};t={}", row.t),
                    row.tail,
                    row.bound,
                ));
                out.push(VerifierRecord::new(
                    "martingale.log_zmax_tail",
                    model,
                    format!("n={n};t={}", row.t),
                    row.log_tail,
                    row.log_bound,
                ));
            }
        }
        Err(e) => out.push(VerifierRecord::failed("martingale.zmax_tail", model, format!("n={n}"), &e)),
    }
    for seed in [7u64, 11] {
        let traj = match sample_trajectory(model, 10_010, seed) {
            Ok(t) => t,
            Err(e) => {
                out.push(VerifierRecord::failed("martingale.sample", model, format!("seed={seed}"), &e));
                continue;
            }
        };
        for n in [100usize, 10_000] {
            record(out, "martingale.chain_rule", model, format!("seed={seed};n={n}"), DECOMPOSITION_TOL, {
                chain_rule_decomposition(model, &traj, n).map(|d| d.identity_residual)
            });
        }
        for m in [1usize, 2, 4, 8] {
            record(out, "martingale.truncated_identity", model, format!("seed={seed};n=10000;m={m}"), DECOMPOSITION_TOL, {
                truncated_decomposition(model, &traj, 10_000, m)
                    .map(|d| d.identity_residual.max((d.i_term + d.j_term - d.neg_log_prob).abs()))
            });
        }
        if let Source::Markov(_) = model.source() {
            record(out, "martingale.markov_constant_log_z", model, format!("seed={seed};depth=8"), 1e-12, {
                (0..200)
                    .map(|base| {
                        z_trace(model, &traj, 8, base)
                            .map(|t| t.z_log[1..].iter().map(|z| (z - t.z_log[1]).abs()).fold(0.0, f64::max))
                    })
                    .try_fold(0.0f64, |acc, r| r.map(|v| acc.max(v)))
            });
        }
    }
}

fn parsing_specs() -> Vec<ParserSpec> {
    vec![
        ParserSpec::Fixed { k: 4 },
        ParserSpec::Growing { schedule: GrowthSchedule::Sqrt },
        ParserSpec::Growing { schedule: GrowthSchedule::Log2 },
        ParserSpec::Lz78 {},
        ParserSpec::RandomSublinear { budget: Budget::Sqrt },
        ParserSpec::Adversarial { budget: Budget::Sqrt },
        ParserSpec::CounterexampleU { k: 4 },
        ParserSpec::CounterexampleV { k: 4, epsilon: 0.05 },
        ParserSpec::CounterexampleW { k: 4, epsilon: 0.05 },
        ParserSpec::Intermittent { k: 4 },
    ]
}

fn parsing_checks(model: &ProcessModel, out: &mut Vec<VerifierRecord>) {
    let traj = match sample_trajectory(model, 5_001, 3) {
        Ok(t) => t,
        Err(e) => {
            out.push(VerifierRecord::failed("parsing.sample", model, "seed=3".into(), &e));
            return;
        }
    };
    let h_ref = default_entropy_rate(model).map(|b| b.midpoint()).unwrap_or(0.5);
    let input = ParseInput {
        model,
        symbols: traj.symbols(),
        seed: 3,
        h_ref,
    };
    let plans = [
        PerturbationPlan::Trim { left: 0, right: 1 },
        PerturbationPlan::Extend { left: 0, right: 1 },
        PerturbationPlan::Extend { left: 1, right: 1 },
    ];
    for spec in parsing_specs() {
        for n in [64usize, 1_000, 5_000, 5_001] {
            let params = format!("{};n={n}", spec.label());
            match spec.parse(&input, n) {
                Ok(p) => {
                    let report = validate_parsing(p.boundaries(), n);
                    out.push(VerifierRecord::new("parsing.valid", model, params.clone(), report.issues.len() as f64, 0.0));
                    for plan in &plans {
                        let params = format!("{params};{}", plan.label());
                        let ok = plan.apply(&p).and_then(|q| check_perturbation(&q));
                        record(out, "parsing.perturbation", model, params, 0.0, ok.map(|()| 0.0));
                    }
                }
                Err(e) => out.push(VerifierRecord::failed("parsing.valid", model, params, &e)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_models_pass_everything() {
        let records = run_suite(Suite::All, &default_models());
        let failures: Vec<_> = records.iter().filter(|r| !r.pass).collect();
        assert!(failures.is_empty(), "{failures:#?}");
        for name in ["martingale.property", "measures.normalization", "parsing.valid", "martingale.chain_rule"] {
            assert!(records.iter().any(|r| r.check_name == name), "{name}");
        }
        for r in records.iter().filter(|r| r.check_name.starts_with("martingale.property")) {
            assert!(r.residual <= 1e-10);
        }
    }

    #[test]
    fn corrupted_model_fails_validation() {
        let bad = ProcessModel::markov(vec![vec![0.71, 0.3], vec![0.2, 0.8]], vec![0.4, 0.6])
            .unwrap()
            .with_id("bad");
        let records = run_suite(Suite::All, &[bad]);
        assert!(records.iter().any(|r| !r.pass && r.check_name.starts_with("validate.")));
        assert!(records.iter().all(|r| r.check_name.starts_with("validate.")));
    }

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().to_string(), name);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }
}
