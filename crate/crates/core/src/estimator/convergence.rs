use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sum_blocks, EstimatorRecord, OracleTargets};
use crate::error::{Error, Result};
use crate::measures::{prefix_log_probs, sample_trajectory, ProcessModel, Trajectory};
use crate::parsing::{ParseInput, ParserSpec, PerturbationPlan};

/// Fewest seeds accepted in L1 mode.
pub const MIN_L1_SEEDS: usize = 20;
/// Largest `modification / N` accepted at the end of a perturbation grid.
pub const SUBEXTENSIVE_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// One trajectory, nested prefixes.
    #[serde(rename = "as")]
    AlmostSure,
    /// Independent trajectories, mean absolute deviation at the largest `N`.
    #[serde(rename = "l1")]
    L1,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub model_id: String,
    pub parser: ParserSpec,
    pub mode: Mode,
    pub perturbation: Option<PerturbationPlan>,
    /// One oracle per ergodic component, computed before sampling.
    pub oracles: Vec<OracleTargets>,
    /// Sorted by `N`, then by position in the seed list.
    pub series: Vec<EstimatorRecord>,
    /// Max deviation over the last quartile of the grid (all seeds).
    pub tail_deviation: f64,
    /// Mean deviation across seeds at the largest `N`.
    pub l1_deviation: f64,
    /// Sample standard deviation of those deviations (0 for one seed).
    pub l1_sigma: f64,
    pub tolerance: f64,
    /// `max(tolerance, 3 sigma / sqrt(seeds))` in L1 mode, `tolerance` otherwise.
    pub effective_tolerance: f64,
    pub pass: bool,
}

impl ConvergenceReport {
    /// Records at the largest `N`, one per seed.
    pub fn final_records(&self) -> impl Iterator<Item = &EstimatorRecord> {
        let n_max = self.series.last().map_or(0, |r| r.n);
        self.series.iter().filter(move |r| r.n == n_max)
    }
}

pub(super) fn check_grid(n_grid: &[usize]) -> Result<()> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "N grid must be non-empty, positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Index of the first grid point in the last quartile.
pub(super) fn last_quartile_start(len: usize) -> usize {
    len - len.div_ceil(4)
}

pub(super) struct Sampled {
    pub traj: Trajectory,
    pub prefix: Vec<f64>,
}

pub(super) fn sample_all(model: &ProcessModel, seeds: &[u64], len: usize) -> Result<Vec<Sampled>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let traj = sample_trajectory(model, len, seed)?;
            let prefix = prefix_log_probs(model, traj.symbols());
            Ok(Sampled { traj, prefix })
        })
        .collect()
}

/// Estimates one `(seed, N)` cell.
pub(super) fn estimate(
    model: &ProcessModel,
    spec: &ParserSpec,
    plan: Option<&PerturbationPlan>,
    sampled: &Sampled,
    oracles: &[OracleTargets],
    n: usize,
) -> Result<EstimatorRecord> {
    let traj = &sampled.traj;
    let component = traj.component();
    let oracle = &oracles[component.unwrap_or(0)];
    let input = ParseInput {
        model,
        symbols: traj.symbols(),
        seed: traj.seed(),
        h_ref: oracle.rate.midpoint(),
    };
    let parsing = spec.parse(&input, n)?;
    let symbols = &traj.symbols()[..n];
    let (blockwise_info, modification) = match plan {
        None => (sum_blocks(model, symbols, parsing.blocks(), n)?, 0),
        Some(plan) => {
            let perturbed = plan.apply(&parsing)?;
            (sum_blocks(model, symbols, perturbed.blocks(), n)?, perturbed.modification())
        }
    };
    let lp = sampled.prefix[n - 1];
    if lp == f64::NEG_INFINITY {
        return Err(Error::OutOfSupport);
    }
    let smb_info = -lp / n as f64;
    let target = oracle.target(spec, n);
    Ok(EstimatorRecord {
        n,
        seed: traj.seed(),
        parser: *spec,
        blockwise_info,
        smb_info,
        residual: blockwise_info - smb_info,
        c_over_n: parsing.density(),
        target: target.value,
        deviation: target.deviation(blockwise_info),
        component,
        modification,
    })
}

#[allow(clippy::too_many_arguments)]
fn run(
    model: &ProcessModel,
    spec: &ParserSpec,
    plan: Option<PerturbationPlan>,
    n_grid: &[usize],
    seeds: &[u64],
    mode: Mode,
    tol: f64,
    oracles: Vec<OracleTargets>,
    sampled: Vec<Sampled>,
) -> Result<ConvergenceReport> {
    let cells: Vec<(usize, usize)> = n_grid
        .iter()
        .flat_map(|&n| (0..seeds.len()).map(move |s| (n, s)))
        .collect();
    let series = cells
        .par_iter()
        .map(|&(n, s)| estimate(model, spec, plan.as_ref(), &sampled[s], &oracles, n))
        .collect::<Result<Vec<_>>>()?;

    let tail_from = n_grid[last_quartile_start(n_grid.len())];
    let tail_deviation = series
        .iter()
        .filter(|r| r.n >= tail_from)
        .map(|r| r.deviation)
        .fold(0.0, f64::max);
    let n_max = *n_grid.last().expect("non-empty grid");
    let finals: Vec<f64> = series.iter().filter(|r| r.n == n_max).map(|r| r.deviation).collect();
    let count = finals.len() as f64;
    let l1_deviation = finals.iter().sum::<f64>() / count;
    let l1_sigma = if finals.len() > 1 {
        (finals.iter().map(|d| (d - l1_deviation).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    let (effective_tolerance, pass) = match mode {
        Mode::AlmostSure => (tol, tail_deviation < tol),
        Mode::L1 => {
            let eff = tol.max(3.0 * l1_sigma / count.sqrt());
            (eff, l1_deviation < eff)
        }
    };
    Ok(ConvergenceReport {
        model_id: model.id().to_owned(),
        parser: *spec,
        mode,
        perturbation: plan,
        oracles,
        series,
        tail_deviation,
        l1_deviation,
        l1_sigma,
        tolerance: tol,
        effective_tolerance,
        pass,
    })
}

fn check_seeds(seeds: &[u64], mode: Mode) -> Result<()> {
    let distinct: HashSet<u64> = seeds.iter().copied().collect();
    if distinct.len() != seeds.len() {
        return Err(Error::InvalidParameter("seeds must be distinct".into()));
    }
    match mode {
        Mode::AlmostSure if seeds.len() != 1 => Err(Error::InvalidParameter(format!(
            "almost-sure mode follows one trajectory, got {} seeds",
            seeds.len()
        ))),
        Mode::L1 if seeds.len() < MIN_L1_SEEDS => Err(Error::InvalidParameter(format!(
            "L1 mode needs at least {MIN_L1_SEEDS} seeds, got {}",
            seeds.len()
        ))),
        _ => Ok(()),
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tolerance must be > 0, got {tol}")))
    }
}

/// Runs `spec` over `n_grid` and compares with the oracle limit.
///
/// In almost-sure mode the grid is evaluated on nested prefixes of a single
/// trajectory and the verdict is `tail_deviation < tol`. In L1 mode every
/// seed gets its own trajectory and the verdict is
/// `l1_deviation < max(tol, 3 sigma / sqrt(seeds))`. Mixture trajectories are
/// compared with the rate of the component that generated them.
pub fn convergence_experiment(
    model: &ProcessModel,
    spec: &ParserSpec,
    n_grid: &[usize],
    seeds: &[u64],
    mode: Mode,
    tol: f64,
) -> Result<ConvergenceReport> {
    check_grid(n_grid)?;
    check_seeds(seeds, mode)?;
    check_tol(tol)?;
    spec.validate()?;
    let oracles = OracleTargets::per_component(model, spec)?;
    let sampled = sample_all(model, seeds, *n_grid.last().expect("non-empty grid"))?;
    run(model, spec, None, n_grid, seeds, mode, tol, oracles, sampled)
}

/// Almost-sure convergence of the blockwise sum over perturbed blocks.
///
/// The plan must be subextensive along the grid: `modification / N` may not
/// increase and must end below [`SUBEXTENSIVE_LIMIT`].
pub fn perturbation_experiment(
    model: &ProcessModel,
    spec: &ParserSpec,
    plan: &PerturbationPlan,
    n_grid: &[usize],
    seed: u64,
    tol: f64,
) -> Result<ConvergenceReport> {
    check_grid(n_grid)?;
    check_tol(tol)?;
    spec.validate()?;
    let oracles = OracleTargets::per_component(model, spec)?;
    let sampled = sample_all(model, &[seed], *n_grid.last().expect("non-empty grid"))?;
    let traj = &sampled[0].traj;
    let input = ParseInput {
        model,
        symbols: traj.symbols(),
        seed,
        h_ref: oracles[traj.component().unwrap_or(0)].rate.midpoint(),
    };
    let mut previous = f64::INFINITY;
    for (i, &n) in n_grid.iter().enumerate() {
        let modified = plan.apply(&spec.parse(&input, n)?)?.modification();
        let density = modified as f64 / n as f64;
        let last = i + 1 == n_grid.len();
        if density > previous || (last && density >= SUBEXTENSIVE_LIMIT) {
            return Err(Error::BudgetNotSubextensive { modified, n });
        }
        previous = density;
    }
    run(model, spec, Some(*plan), n_grid, &[seed], Mode::AlmostSure, tol, oracles, sampled)
}
