use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::convergence::{check_grid, estimate, last_quartile_start, sample_all};
use super::{EstimatorRecord, OracleTargets};
use crate::error::{Error, Result};
use crate::measures::{discrepancy_gap, DiscrepancyGap, ProcessModel, Source};
use crate::parsing::ParserSpec;

/// Tolerance on each parity average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityTolerance {
    Absolute(f64),
    /// Fraction of the oracle limit.
    Relative(f64),
}

impl ParityTolerance {
    pub fn for_limit(self, limit: f64) -> f64 {
        match self {
            ParityTolerance::Absolute(t) => t,
            ParityTolerance::Relative(f) => f * limit.abs(),
        }
    }

    fn check(self) -> Result<()> {
        let (ParityTolerance::Absolute(t) | ParityTolerance::Relative(t)) = self;
        if t > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("tolerance must be > 0, got {t}")))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub model_id: String,
    pub k: usize,
    pub epsilon_schedule: Vec<f64>,
    /// Oracle limits, computed before sampling.
    pub gap: DiscrepancyGap,
    pub series: Vec<EstimatorRecord>,
    /// Mean over even `N` in the last quartile of the grid.
    pub even_avg: f64,
    /// Mean over odd `N` in the last quartile of the grid.
    pub odd_avg: f64,
    pub even_tolerance: f64,
    pub odd_tolerance: f64,
    pub even_pass: bool,
    pub odd_pass: bool,
    /// `|(even_avg - odd_avg) - gap| <= even_tolerance + odd_tolerance`.
    pub gap_pass: bool,
    pub pass: bool,
}

impl CounterexampleReport {
    pub fn observed_gap(&self) -> f64 {
        self.even_avg - self.odd_avg
    }
}

/// `epsilon` used at grid index `i`: the schedule is spread over consecutive
/// segments of the grid.
fn epsilon_at(schedule: &[f64], i: usize, grid_len: usize) -> f64 {
    schedule[(i * schedule.len() / grid_len).min(schedule.len() - 1)]
}

/// Runs the parity-alternating parsing along one trajectory and checks that
/// the even and odd subsequences settle at their two distinct oracle limits.
///
/// Refuses mixtures and sources whose discrepancy gap does not exceed
/// `max(resolution, entropy-rate bracket width)`.
pub fn counterexample_experiment(
    model: &ProcessModel,
    k: usize,
    epsilon_schedule: &[f64],
    n_grid: &[usize],
    seed: u64,
    resolution: f64,
    tol: ParityTolerance,
) -> Result<CounterexampleReport> {
    if matches!(model.source(), Source::Mixture(_)) {
        return Err(Error::NonErgodic);
    }
    check_grid(n_grid)?;
    tol.check()?;
    if epsilon_schedule.is_empty() {
        return Err(Error::InvalidParameter("epsilon schedule is empty".into()));
    }
    let specs: Vec<ParserSpec> = (0..n_grid.len())
        .map(|i| ParserSpec::CounterexampleW {
            k,
            epsilon: epsilon_at(epsilon_schedule, i, n_grid.len()),
        })
        .collect();
    for s in &specs {
        s.validate()?;
    }
    let gap = discrepancy_gap(model, k)?;
    let threshold = resolution.max(gap.bracket_width());
    if gap.gap.is_nan() || gap.gap <= threshold {
        return Err(Error::GapTooSmall {
            gap: gap.gap,
            resolution: threshold,
        });
    }
    let tail = &n_grid[last_quartile_start(n_grid.len())..];
    if !tail.iter().any(|n| n % 2 == 0) || !tail.iter().any(|n| n % 2 == 1) {
        return Err(Error::InvalidParameter(
            "last quartile of the N grid must contain both parities".into(),
        ));
    }

    let oracles = vec![OracleTargets::new(model, &specs[0])?];

    let sampled = sample_all(model, &[seed], *n_grid.last().expect("non-empty grid"))?;
    let series = n_grid
        .par_iter()
        .zip(&specs)
        .map(|(&n, spec)| estimate(model, spec, None, &sampled[0], &oracles, n))
        .collect::<Result<Vec<_>>>()?;

    let tail_from = tail[0];
    let average = |parity: usize| {
        let v: Vec<f64> = series
            .iter()
            .filter(|r| r.n >= tail_from && r.n % 2 == parity)
            .map(|r| r.blockwise_info)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (even_avg, odd_avg) = (average(0), average(1));
    let even_tolerance = tol.for_limit(gap.fixed_limit);
    let odd_tolerance = tol.for_limit(gap.split_limit);
    let even_pass = (even_avg - gap.fixed_limit).abs() <= even_tolerance;
    let odd_pass = (odd_avg - gap.split_limit).abs() <= odd_tolerance;
    let gap_pass = ((even_avg - odd_avg) - gap.gap).abs() <= even_tolerance + odd_tolerance;
    Ok(CounterexampleReport {
        model_id: model.id().to_owned(),
        k,
        epsilon_schedule: epsilon_schedule.to_vec(),
        gap,
        series,
        even_avg,
        odd_avg,
        even_tolerance,
        odd_tolerance,
        even_pass,
        odd_pass,
        gap_pass,
        pass: even_pass && odd_pass && gap_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::reference;

    const GRID: [usize; 8] = [1000, 1001, 2000, 2001, 3000, 3001, 4000, 4001];

    #[test]
    fn schedule_segments() {
        let s = [0.1, 0.05, 0.02];
        let picked: Vec<f64> = (0..9).map(|i| epsilon_at(&s, i, 9)).collect();
        assert_eq!(picked, [0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.02, 0.02, 0.02]);
        assert_eq!(epsilon_at(&s, 0, 1), 0.1);
    }

    #[test]
    fn degenerate_sources_refused() {
        let tol = ParityTolerance::Relative(0.02);
        let err = counterexample_experiment(&reference::m1(), 4, &[0.05], &GRID, 1, 1e-6, tol).unwrap_err();
        assert!(matches!(err, Error::GapTooSmall { .. }));
        let err = counterexample_experiment(&reference::iid_uniform_binary(), 2, &[0.05], &GRID, 1, 1e-6, tol)
            .unwrap_err();
        assert!(matches!(err, Error::GapTooSmall { gap, .. } if gap.abs() < 1e-12));
        let err = counterexample_experiment(&reference::mixture_m1_uniform(), 4, &[0.05], &GRID, 1, 1e-6, tol)
            .unwrap_err();
        assert!(matches!(err, Error::NonErgodic));
    }

    #[test]
    fn grid_needs_both_parities() {
        let err = counterexample_experiment(
            &reference::h1(),
            4,
            &[0.05],
            &[1000, 2000, 3000, 4000],
            1,
            1e-6,
            ParityTolerance::Absolute(0.01),
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn h1_small_run_has_both_targets() {
        let r = counterexample_experiment(&reference::h1(), 4, &[0.1, 0.05], &GRID, 5, 1e-6, ParityTolerance::Relative(0.05))
            .unwrap();
        assert!(r.gap.gap > 0.0);
        for rec in &r.series {
            let expected = if rec.n % 2 == 0 { r.gap.fixed_limit } else { r.gap.split_limit };
            assert!((rec.target - expected).abs() < 1e-4);
        }
    }
}
