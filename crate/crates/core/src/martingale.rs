//! The Breiman martingale `Z_n(x) = P([x_2^n]) / P([x_1^n])`, `Z_1 = 1 / P([x_1])`.
//!
//! Along a trajectory, `-ln P([x_1^n]) = sum_{k<n} ln Z_{n-k}(T^k x)`. The
//! almost-sure limit `Z` has no finite representation, so only depth-`M`
//! truncations `Z_M` are evaluated; for first-order Markov sources `Z_M = Z`
//! for every `M >= 2`.
//!
//! The `*_check` / `verify_*` functions test the martingale identities by
//! exhaustive enumeration of cylinders, independently of the DFS used for
//! block entropies.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{
    block_entropies, check_cap, log_prob_unchecked, suffix_log_probs, Cursor, ProcessModel,
    Symbol, Trajectory, ENUMERATION_CAP,
};
use crate::numeric::CompensatedSum;

/// Tolerance of the exact enumeration identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance of identities accumulated along trajectories.
pub const DECOMPOSITION_TOL: f64 = 1e-9;

/// `ln Z_n` of a word of length `n`.
pub fn z_value(model: &ProcessModel, word: &[Symbol]) -> Result<f64> {
    if word.is_empty() {
        return Err(Error::InvalidParameter("word must be non-empty".into()));
    }
    model.alphabet().check_word(word)?;
    let full = log_prob_unchecked(model, word);
    if full == f64::NEG_INFINITY {
        return Err(Error::OutOfSupport);
    }
    Ok(log_prob_unchecked(model, &word[1..]) - full)
}

/// `ln Z_1 .. ln Z_n` evaluated on the shifted sequence `T^base x`.
#[derive(Debug, Clone, Serialize)]
pub struct MartingaleTrace {
    pub z_log: Vec<f64>,
    pub running_max_log: Vec<f64>,
    pub base_index: usize,
}

impl MartingaleTrace {
    /// `ln Z_n` at the deepest evaluated `n`, the stand-in for `ln Z`.
    pub fn deepest(&self) -> Option<f64> {
        self.z_log.last().copied()
    }

    pub fn log_max(&self) -> Option<f64> {
        self.running_max_log.last().copied()
    }
}

pub fn z_trace(model: &ProcessModel, traj: &Trajectory, n: usize, base: usize) -> Result<MartingaleTrace> {
    let window = traj.prefix(base + n)?;
    z_trace_of(model, &window[base..], base)
}

fn z_trace_of(model: &ProcessModel, word: &[Symbol], base_index: usize) -> Result<MartingaleTrace> {
    let mut full = Cursor::new(model);
    let mut shifted = Cursor::new(model);
    let mut z_log = Vec::with_capacity(word.len());
    let mut running_max_log = Vec::with_capacity(word.len());
    let mut max = f64::NEG_INFINITY;
    for (j, &s) in word.iter().enumerate() {
        let lp = full.push(s);
        if lp == f64::NEG_INFINITY {
            return Err(Error::OutOfSupport);
        }
        let denominator_free = if j == 0 { 0.0 } else { shifted.push(s) };
        let z = denominator_free - lp;
        max = max.max(z);
        z_log.push(z);
        running_max_log.push(max);
    }
    Ok(MartingaleTrace {
        z_log,
        running_max_log,
        base_index,
    })
}

/// `-ln P([x_1^n]) = I + J`, with the evaluation residual of the identity.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecompositionResult {
    pub neg_log_prob: f64,
    pub i_term: f64,
    pub j_term: f64,
    /// `None` for the untruncated decomposition.
    pub truncation_m: Option<usize>,
    /// Untruncated: `|sum_k ln Z_{n-k}(T^k x) - (-ln P([x_1^n]))|` between
    /// the backward telescoping sum and the forward probability.
    /// Truncated: `|j_term - sum_k phi_{n-k,M}(T^k x)|`.
    pub identity_residual: f64,
}

fn finite_suffixes(model: &ProcessModel, word: &[Symbol]) -> Result<Vec<f64>> {
    let s = suffix_log_probs(model, word);
    if s.contains(&f64::NEG_INFINITY) {
        return Err(Error::OutOfSupport);
    }
    Ok(s)
}

fn forward_neg_log_prob(model: &ProcessModel, word: &[Symbol]) -> Result<f64> {
    let lp = log_prob_unchecked(model, word);
    if lp == f64::NEG_INFINITY {
        return Err(Error::OutOfSupport);
    }
    Ok(-lp)
}

/// Chain-rule decomposition of `-ln P([x_1^n])`.
///
/// `I_n` uses, at each offset `k`, the deepest martingale value the
/// trajectory allows (`Z_{L-k}(T^k x)` with `L` the trajectory length) as
/// the proxy for the limit `Z(T^k x)`; `J_n` is the remainder.
pub fn chain_rule_decomposition(model: &ProcessModel, traj: &Trajectory, n: usize) -> Result<DecompositionResult> {
    if n == 0 {
        return Err(Error::InvalidParameter("prefix length must be >= 1".into()));
    }
    let prefix = traj.prefix(n)?;
    let neg_log_prob = forward_neg_log_prob(model, prefix)?;
    let suffix = finite_suffixes(model, prefix)?;
    // ln Z_{n-k}(T^k x) = ln P([x_{k+2}^n]) - ln P([x_{k+1}^n])
    let telescoped: CompensatedSum = (0..n).map(|k| suffix[k + 1] - suffix[k]).collect();
    let deep = finite_suffixes(model, traj.symbols())?;
    let i_term: CompensatedSum = (0..n).map(|k| deep[k + 1] - deep[k]).collect();
    let i_term = i_term.value();
    Ok(DecompositionResult {
        neg_log_prob,
        i_term,
        j_term: neg_log_prob - i_term,
        truncation_m: None,
        identity_residual: (telescoped.value() - neg_log_prob).abs(),
    })
}

/// `ln Z_M(T^k x)` for `k in 0..n`.
fn truncated_logs(model: &ProcessModel, symbols: &[Symbol], n: usize, m: usize) -> Result<Vec<f64>> {
    (0..n)
        .map(|k| {
            let window = &symbols[k..k + m];
            let full = log_prob_unchecked(model, window);
            if full == f64::NEG_INFINITY {
                return Err(Error::OutOfSupport);
            }
            Ok(log_prob_unchecked(model, &window[1..]) - full)
        })
        .collect()
}

/// `-ln P([x_1^n]) = I_{n,M} + J_{n,M}` with `I_{n,M} = sum_{k<n} ln Z_M(T^k x)`.
pub fn truncated_decomposition(
    model: &ProcessModel,
    traj: &Trajectory,
    n: usize,
    m: usize,
) -> Result<DecompositionResult> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and M must be >= 1".into()));
    }
    let symbols = traj.prefix(n + m)?;
    let prefix = &symbols[..n];
    let neg_log_prob = forward_neg_log_prob(model, prefix)?;
    let z_m = truncated_logs(model, symbols, n, m)?;
    let i_term = z_m.iter().copied().collect::<CompensatedSum>().value();
    let j_term = neg_log_prob - i_term;
    let suffix = finite_suffixes(model, prefix)?;
    let phi: CompensatedSum = (0..n).map(|k| (suffix[k + 1] - suffix[k]) - z_m[k]).collect();
    Ok(DecompositionResult {
        neg_log_prob,
        i_term,
        j_term,
        truncation_m: Some(m),
        identity_residual: (j_term - phi.value()).abs(),
    })
}

/// Visits every word of length `n` in lexicographic order.
fn for_each_word(size: usize, n: usize, mut f: impl FnMut(&[Symbol])) {
    let mut word = vec![0 as Symbol; n];
    loop {
        f(&word);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if (word[i] as usize) + 1 < size {
                word[i] += 1;
                break;
            }
            word[i] = 0;
        }
    }
}

/// Max over `x_1^n` in the support of
/// `|sum_a Z_{n+1}(x_1^n a) P([x_1^n a]) - P([x_2^n])|`.
pub fn verify_martingale_property(model: &ProcessModel, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let size = model.alphabet().size();
    check_cap(size, n + 1, ENUMERATION_CAP)?;
    let mut worst = 0.0f64;
    let mut extended = vec![0 as Symbol; n + 1];
    let mut failure = None;
    for_each_word(size, n, |word| {
        if failure.is_some() || log_prob_unchecked(model, word) == f64::NEG_INFINITY {
            return;
        }
        extended[..n].copy_from_slice(word);
        let mut lhs = CompensatedSum::default();
        for a in 0..size {
            extended[n] = a as Symbol;
            let lp = log_prob_unchecked(model, &extended);
            if lp == f64::NEG_INFINITY {
                continue;
            }
            match z_value(model, &extended) {
                Ok(z) => lhs.add(z.exp() * lp.exp()),
                Err(e) => failure = Some(e),
            }
        }
        let rhs = log_prob_unchecked(model, &word[1..]).exp();
        worst = worst.max((lhs.value() - rhs).abs());
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(worst),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailRow {
    pub t: f64,
    /// `P(max_{k<=n} Z_k > t)`.
    pub tail: f64,
    /// `|A| / t`.
    pub bound: f64,
    /// `P(max_{k<=n} ln Z_k > t)`.
    pub log_tail: f64,
    /// `|A| e^{-t}`.
    pub log_bound: f64,
    pub pass: bool,
}

/// Exact tail of `Z_max` restricted to depth `n`, against the maximal
/// inequality bounds. The restricted maximum is dominated by the full one,
/// so the bounds apply a fortiori.
pub fn zmax_tail_check(model: &ProcessModel, n: usize, t_grid: &[f64]) -> Result<Vec<TailRow>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| t.is_nan() || **t <= 0.0) {
        return Err(Error::InvalidParameter(format!("thresholds must be > 0, got {t}")));
    }
    let size = model.alphabet().size();
    check_cap(size, n, ENUMERATION_CAP)?;
    let mut atoms = Vec::new(); // (probability, ln Z_max)
    let mut failure = None;
    for_each_word(size, n, |word| {
        let lp = log_prob_unchecked(model, word);
        if lp == f64::NEG_INFINITY || failure.is_some() {
            return;
        }
        match z_trace_of(model, word, 0) {
            Ok(trace) => atoms.push((lp.exp(), trace.log_max().expect("n >= 1"))),
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    let alphabet = size as f64;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let tail = mass_above(&atoms, t.ln());
            let log_tail = mass_above(&atoms, t);
            let bound = alphabet / t;
            let log_bound = alphabet * (-t).exp();
            TailRow {
                t,
                tail,
                bound,
                log_tail,
                log_bound,
                pass: tail <= bound + 1e-12 && log_tail <= log_bound + 1e-12,
            }
        })
        .collect())
}

fn mass_above(atoms: &[(f64, f64)], log_threshold: f64) -> f64 {
    atoms
        .iter()
        .filter(|(_, z)| *z > log_threshold)
        .map(|(p, _)| *p)
        .collect::<CompensatedSum>()
        .value()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpectationCheck {
    pub n: usize,
    /// `E[ln Z_n]` by enumeration of `ln Z_n`.
    pub expectation: f64,
    /// `H(P_n) - H(P_{n-1})` from the block-entropy enumeration.
    pub beta: f64,
    pub residual: f64,
}

pub fn expected_logz_check(model: &ProcessModel, n: usize) -> Result<ExpectationCheck> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let size = model.alphabet().size();
    check_cap(size, n, ENUMERATION_CAP)?;
    let mut expectation = CompensatedSum::default();
    for_each_word(size, n, |word| {
        let lp = log_prob_unchecked(model, word);
        if lp == f64::NEG_INFINITY {
            return;
        }
        let z = log_prob_unchecked(model, &word[1..]) - lp;
        expectation.add(lp.exp() * z);
    });
    let h = block_entropies(model, n)?;
    let beta = h[n - 1] - if n > 1 { h[n - 2] } else { 0.0 };
    let expectation = expectation.value();
    Ok(ExpectationCheck {
        n,
        expectation,
        beta,
        residual: (expectation - beta).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{beta_sequence, reference, sample_trajectory};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn z_values() {
        let z = z_value(&reference::iid_uniform_binary(), &[0, 1]).unwrap();
        assert!((z - LN2).abs() < 1e-15);
        let z = z_value(&reference::m1(), &[0, 1]).unwrap();
        assert!((z - 5f64.ln()).abs() < 1e-14);
        assert!((z - 1.609438).abs() < 1e-6);
        let z = z_value(&reference::m1(), &[1]).unwrap();
        assert!((z - (1.0f64 / 0.6).ln()).abs() < 1e-15);
        assert!((z - 0.510826).abs() < 1e-6);
    }

    #[test]
    fn z_value_out_of_support() {
        let m = ProcessModel::markov(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.5, 0.5]).unwrap();
        assert!(matches!(z_value(&m, &[1, 1]), Err(Error::OutOfSupport)));
    }

    #[test]
    fn uniform_trace_is_flat() {
        let m = reference::iid_uniform_binary();
        let t = sample_trajectory(&m, 20, 1).unwrap();
        let trace = z_trace(&m, &t, 10, 3).unwrap();
        assert_eq!(trace.base_index, 3);
        for z in &trace.z_log {
            assert!((z - LN2).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_matches_z_value_on_prefixes() {
        let m = reference::m1();
        let t = sample_trajectory(&m, 50, 7).unwrap();
        let trace = z_trace(&m, &t, 3, 0).unwrap();
        for j in 1..=3 {
            let direct = z_value(&m, &t.symbols()[..j]).unwrap();
            assert!((trace.z_log[j - 1] - direct).abs() < 1e-13);
        }
        assert!(trace.running_max_log.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn markov_trace_constant_after_two() {
        let m = reference::m1();
        let t = sample_trajectory(&m, 200, 7).unwrap();
        let trace = z_trace(&m, &t, 100, 5).unwrap();
        let (x1, x2) = (t.symbols()[5] as usize, t.symbols()[6] as usize);
        let pi: [f64; 2] = [0.4, 0.6];
        let p: [[f64; 2]; 2] = [[0.7, 0.3], [0.2, 0.8]];
        let expected: f64 = (pi[x2] / (pi[x1] * p[x1][x2])).ln();
        for z in &trace.z_log[1..] {
            assert!((z - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_needs_room() {
        let m = reference::m1();
        let t = sample_trajectory(&m, 10, 7).unwrap();
        assert!(matches!(
            z_trace(&m, &t, 8, 3),
            Err(Error::InsufficientLength { .. })
        ));
    }

    #[test]
    fn martingale_property_reference_cases() {
        assert!(verify_martingale_property(&reference::iid_uniform_binary(), 3).unwrap() <= 1e-15);
        assert!(verify_martingale_property(&reference::m1(), 5).unwrap() <= 1e-12);
        assert!(verify_martingale_property(&reference::h1(), 8).unwrap() <= 1e-10);
    }

    #[test]
    fn uniform_chain_rule() {
        let m = reference::iid_uniform_binary();
        let t = sample_trajectory(&m, 16, 2).unwrap();
        let d = chain_rule_decomposition(&m, &t, 16).unwrap();
        assert!((d.neg_log_prob - 16.0 * LN2).abs() < 1e-12);
        assert!(d.identity_residual <= 1e-12);
        assert!(d.j_term.abs() < 1e-12);
    }

    #[test]
    fn chain_rule_exact_on_markov_and_hmm() {
        let m = reference::m1();
        let t = sample_trajectory(&m, 100, 7).unwrap();
        assert!(chain_rule_decomposition(&m, &t, 100).unwrap().identity_residual <= 1e-9);
        let h = reference::h1();
        let t = sample_trajectory(&h, 64, 11).unwrap();
        let d = chain_rule_decomposition(&h, &t, 64).unwrap();
        assert!(d.identity_residual <= 1e-9);
        assert!((d.i_term + d.j_term - d.neg_log_prob).abs() <= 1e-9);
    }

    #[test]
    fn truncated_uniform() {
        let m = reference::iid_uniform_binary();
        let t = sample_trajectory(&m, 64, 2).unwrap();
        let d = truncated_decomposition(&m, &t, 32, 4).unwrap();
        assert!((d.i_term - 32.0 * LN2).abs() < 1e-12);
        assert!(d.j_term.abs() < 1e-12);
        assert_eq!(d.truncation_m, Some(4));
    }

    #[test]
    fn truncated_needs_room() {
        let m = reference::m1();
        let t = sample_trajectory(&m, 10, 2).unwrap();
        assert!(matches!(
            truncated_decomposition(&m, &t, 8, 3),
            Err(Error::InsufficientLength { .. })
        ));
    }

    #[test]
    fn tail_check_uniform() {
        let rows = zmax_tail_check(&reference::iid_uniform_binary(), 6, &[1.5, 2.5]).unwrap();
        assert!((rows[0].tail - 1.0).abs() < 1e-12);
        assert!((rows[0].bound - 2.0 / 1.5).abs() < 1e-15);
        assert_eq!(rows[1].tail, 0.0);
        assert!((rows[1].bound - 0.8).abs() < 1e-15);
        assert!(rows.iter().all(|r| r.pass));
    }

    #[test]
    fn tail_check_m1() {
        let rows = zmax_tail_check(&reference::m1(), 10, &[1.5, 2.0, 3.0, 5.0]).unwrap();
        for r in rows {
            assert!(r.tail <= 2.0 / r.t, "{r:?}");
            assert!(r.pass);
        }
        assert!(zmax_tail_check(&reference::m1(), 4, &[0.0]).is_err());
    }

    #[test]
    fn expectation_identities() {
        let c = expected_logz_check(&reference::iid_uniform_binary(), 4).unwrap();
        assert!((c.expectation - LN2).abs() < 1e-14 && c.residual <= 1e-15);
        let c = expected_logz_check(&reference::m1(), 3).unwrap();
        assert!((c.expectation - 0.544587).abs() < 1e-6 && (c.beta - 0.544587).abs() < 1e-6);
        let h = reference::h1();
        let c = expected_logz_check(&h, 6).unwrap();
        assert!(c.residual <= 1e-10);
        let beta12 = beta_sequence(&h, 12).unwrap()[11];
        assert!(c.expectation > beta12);
    }
}
