//! Versioned JSON experiment configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use smbparse::estimator::{Mode, ParityTolerance};
use smbparse::measures::{derive_seed, load_model, reference, ProcessModel};
use smbparse::parsing::{ParserSpec, PerturbationPlan};

use crate::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
/// Prefix of `model` values naming a bundled reference source.
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Model JSON path relative to the config file, or `builtin:<id>`.
    pub model: String,
    pub n_grid: NGrid,
    pub seeds: Seeds,
    pub experiments: Vec<Experiment>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NGrid {
    List(Vec<usize>),
    Geometric { geometric: Geometric },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometric {
    pub start: usize,
    pub stop: usize,
    pub per_decade: usize,
    /// Follow every grid point `N` by `N + 1`.
    #[serde(default)]
    pub both_parities: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Derived { count: usize, master: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Convergence {
        parser: ParserSpec,
        mode: Mode,
        tolerance: f64,
    },
    Perturbation {
        parser: ParserSpec,
        plan: PerturbationPlan,
        tolerance: f64,
    },
    Counterexample {
        k: usize,
        epsilon_schedule: Vec<f64>,
        #[serde(default = "default_resolution")]
        resolution: f64,
        tolerance: ParityTolerance,
    },
}

fn default_resolution() -> f64 {
    1e-6
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Convergence { .. } => "convergence",
            Experiment::Perturbation { .. } => "perturbation",
            Experiment::Counterexample { .. } => "counterexample",
        }
    }
}

impl NGrid {
    pub fn values(&self) -> Result<Vec<usize>, CliError> {
        let v = match self {
            NGrid::List(v) => v.clone(),
            NGrid::Geometric { geometric: g } => {
                if g.start == 0 || g.stop < g.start || g.per_decade == 0 {
                    return Err(CliError::Config("geometric grid needs 0 < start <= stop, per_decade > 0".into()));
                }
                let mut out: Vec<usize> = Vec::new();
                for i in 0.. {
                    let n = (g.start as f64 * 10f64.powf(i as f64 / g.per_decade as f64)).round() as usize;
                    if n > g.stop {
                        break;
                    }
                    if out.last().is_some_and(|&last| n <= last) {
                        continue;
                    }
                    out.push(n);
                    if g.both_parities {
                        out.push(n + 1);
                    }
                }
                out
            }
        };
        if v.is_empty() || v[0] == 0 || v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("N grid must be non-empty, positive and strictly increasing".into()));
        }
        Ok(v)
    }
}

impl Seeds {
    /// Explicit seeds, or `derive_seed(master, i)` for `i in 0..count`.
    pub fn values(&self) -> Result<Vec<u64>, CliError> {
        let v: Vec<u64> = match self {
            Seeds::List(v) => v.clone(),
            Seeds::Derived { count, master } => (0..*count as u64).map(|i| derive_seed(*master, i)).collect(),
        };
        let distinct: HashSet<u64> = v.iter().copied().collect();
        if v.is_empty() || distinct.len() != v.len() {
            return Err(CliError::Config("seeds must be non-empty and distinct".into()));
        }
        Ok(v)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            CliError::Config(format!("{}: at `{}`: {}", origin.display(), e.path(), e.inner()))
        })?;
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {}, expected {CONFIG_SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        if self.experiments.is_empty() {
            return Err(CliError::Config("no experiments".into()));
        }
        self.n_grid.values()?;
        self.seeds.values()?;
        for e in &self.experiments {
            let positive = match e {
                Experiment::Convergence { tolerance, .. } | Experiment::Perturbation { tolerance, .. } => *tolerance,
                Experiment::Counterexample {
                    tolerance: ParityTolerance::Absolute(t) | ParityTolerance::Relative(t),
                    ..
                } => *t,
            };
            if positive.is_nan() || positive <= 0.0 {
                return Err(CliError::Config(format!("{} tolerance must be > 0", e.kind())));
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Loads the model named by `model`, resolving paths against `base`.
    pub fn load_model(&self, base: &Path) -> Result<ProcessModel, CliError> {
        if let Some(id) = self.model.strip_prefix(BUILTIN_PREFIX) {
            return builtin_model(id);
        }
        Ok(load_model(&base.join(&self.model))?)
    }
}

pub fn builtin_model(id: &str) -> Result<ProcessModel, CliError> {
    reference::all()
        .into_iter()
        .chain([reference::mixture_m1_uniform()])
        .find(|m| m.id() == id)
        .ok_or_else(|| CliError::Config(format!("unknown builtin model {id:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::parse(text, Path::new("test.json"))
    }

    const MINIMAL: &str = r#"{
        "schema_version": 1,
        "model": "builtin:M1",
        "n_grid": [1000, 10000],
        "seeds": [7],
        "experiments": [{"kind": "convergence", "parser": {"family": "growing", "schedule": "sqrt"}, "mode": "as", "tolerance": 0.01}]
    }"#;

    #[test]
    fn minimal_config() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.n_grid.values().unwrap(), [1000, 10000]);
        assert_eq!(c.load_model(Path::new(".")).unwrap().id(), "M1");
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("\"seeds\"", "\"colour\": 1, \"seeds\"");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        let text = MINIMAL.replace("\"mode\": \"as\"", "\"mode\": \"as\", \"extra\": 2");
        assert!(parse(&text).is_err());
        assert!(parse(&MINIMAL.replace("\"schema_version\": 1", "\"schema_version\": 2")).is_err());
    }

    #[test]
    fn grids_and_seeds() {
        let g = NGrid::Geometric {
            geometric: Geometric {
                start: 1000,
                stop: 1_000_000,
                per_decade: 1,
                both_parities: true,
            },
        };
        assert_eq!(g.values().unwrap(), [1000, 1001, 10_000, 10_001, 100_000, 100_001, 1_000_000, 1_000_001]);
        assert!(NGrid::List(vec![10, 5]).values().is_err());
        let s = Seeds::Derived { count: 3, master: 9 }.values().unwrap();
        assert_eq!(s, [derive_seed(9, 0), derive_seed(9, 1), derive_seed(9, 2)]);
        assert!(Seeds::List(vec![1, 1]).values().is_err());
    }
}
