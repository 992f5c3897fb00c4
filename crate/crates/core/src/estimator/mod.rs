//! Blockwise information sums, SMB information and the experiments that
//! compare them with oracle limits.
//!
//! For a parsing `x_1^N = w_1 .. w_c` the blockwise information is
//! `(1/N) sum_i -ln P([w_i])` and the SMB information is `-(1/N) ln P([x_1^N])`.
//! Their difference is the factorization residual `r_N / N`, positive when the
//! product of block probabilities is smaller than the joint probability.

mod birkhoff;
mod convergence;
mod counterexample;
mod oracle;

use serde::Serialize;

pub use birkhoff::{sublinear_birkhoff_check, BirkhoffPoint, BirkhoffSeries, IndexFamily, Observable, DEFAULT_DEPTH};
pub use convergence::{
    convergence_experiment, perturbation_experiment, ConvergenceReport, Mode, MIN_L1_SEEDS,
    SUBEXTENSIVE_LIMIT,
};
pub use counterexample::{counterexample_experiment, CounterexampleReport, ParityTolerance};
pub use oracle::{OracleTargets, Target};

use crate::error::{Error, Result};
use crate::measures::{log_prob_unchecked, ProcessModel, Symbol, Trajectory};
use crate::numeric::CompensatedSum;
use crate::parsing::{ParserSpec, Parsing, PerturbedParsing};

/// One estimate at one prefix length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorRecord {
    pub n: usize,
    pub seed: u64,
    pub parser: ParserSpec,
    pub blockwise_info: f64,
    pub smb_info: f64,
    /// `blockwise_info - smb_info`.
    pub residual: f64,
    pub c_over_n: f64,
    /// Oracle limit the estimate is compared with (bracket midpoint).
    pub target: f64,
    /// Distance from `blockwise_info` to the oracle bracket.
    pub deviation: f64,
    /// Mixture component that generated the trajectory, if any.
    pub component: Option<usize>,
    /// Symbols trimmed or added by a perturbation; 0 otherwise.
    pub modification: usize,
}

fn sum_blocks<I>(model: &ProcessModel, symbols: &[Symbol], blocks: I, n: usize) -> Result<f64>
where
    I: Iterator<Item = std::ops::Range<usize>>,
{
    let mut acc = CompensatedSum::default();
    for r in blocks {
        let lp = log_prob_unchecked(model, &symbols[r]);
        if lp == f64::NEG_INFINITY {
            return Err(Error::OutOfSupport);
        }
        acc.add(-lp);
    }
    Ok(acc.value() / n as f64)
}

fn checked_prefix<'t>(model: &ProcessModel, traj: &'t Trajectory, n: usize) -> Result<&'t [Symbol]> {
    if n == 0 {
        return Err(Error::InvalidParameter("prefix length must be >= 1".into()));
    }
    let prefix = traj.prefix(n)?;
    model.alphabet().check_word(prefix)?;
    Ok(prefix)
}

/// `(1/N) sum_i -ln P([w_i])` over the blocks of `parsing`.
pub fn blockwise_info(model: &ProcessModel, traj: &Trajectory, parsing: &Parsing) -> Result<f64> {
    let n = parsing.len();
    let symbols = checked_prefix(model, traj, n)?;
    sum_blocks(model, symbols, parsing.blocks(), n)
}

/// Same sum over perturbed blocks, still normalized by the original `N`.
pub fn blockwise_info_perturbed(model: &ProcessModel, traj: &Trajectory, parsing: &PerturbedParsing) -> Result<f64> {
    let n = parsing.len();
    let symbols = checked_prefix(model, traj, n)?;
    sum_blocks(model, symbols, parsing.blocks(), n)
}

/// `-(1/N) ln P([x_1^N])`.
pub fn smb_info(model: &ProcessModel, traj: &Trajectory, n: usize) -> Result<f64> {
    let symbols = checked_prefix(model, traj, n)?;
    let lp = log_prob_unchecked(model, symbols);
    if lp == f64::NEG_INFINITY {
        return Err(Error::OutOfSupport);
    }
    Ok(-lp / n as f64)
}

/// `r_N / N = (ln P([x_1^N]) - sum_i ln P([w_i])) / N`.
pub fn factorization_residual(model: &ProcessModel, traj: &Trajectory, parsing: &Parsing) -> Result<f64> {
    Ok(blockwise_info(model, traj, parsing)? - smb_info(model, traj, parsing.len())?)
}
