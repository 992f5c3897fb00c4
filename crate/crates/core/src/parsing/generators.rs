use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Parsing;
use crate::error::{Error, Result};
use crate::measures::{suffix_log_probs, ProcessModel, Symbol};

/// Blocks of length `k`; the final block holds the `N mod k` leftover symbols.
pub fn parse_fixed(n: usize, k: usize) -> Result<Parsing> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "block length must satisfy 1 <= K <= N, got K = {k}, N = {n}"
        )));
    }
    let mut boundaries: Vec<usize> = (1..=n / k).map(|i| i * k).collect();
    if !n.is_multiple_of(k) {
        boundaries.push(n);
    }
    Ok(Parsing::from_sorted_unchecked(n, boundaries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthSchedule {
    /// `K_N = ceil(sqrt N)`.
    Sqrt,
    /// `K_N = ceil(log2 N)`.
    Log2,
}

impl GrowthSchedule {
    pub fn block_length(self, n: usize) -> usize {
        match self {
            GrowthSchedule::Sqrt => ceil_sqrt(n),
            GrowthSchedule::Log2 => (usize::BITS - (n - 1).leading_zeros()) as usize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GrowthSchedule::Sqrt => "sqrt",
            GrowthSchedule::Log2 => "log2",
        }
    }
}

pub(crate) fn floor_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

fn ceil_sqrt(n: usize) -> usize {
    let r = floor_sqrt(n);
    if r * r == n {
        r
    } else {
        r + 1
    }
}

/// Fixed-length parsing with the block length growing in `N`.
pub fn parse_growing(n: usize, schedule: GrowthSchedule) -> Result<Parsing> {
    if n < 2 {
        return Err(Error::InvalidParameter("growing schedules need N >= 2".into()));
    }
    parse_fixed(n, schedule.block_length(n))
}

/// LZ78 incremental parsing: each block is the shortest prefix of the
/// remaining input that is not yet a phrase. A trailing remainder that is
/// already a phrase is kept as the final block.
pub fn parse_lz78(symbols: &[Symbol], n: usize) -> Result<Parsing> {
    let input = symbols.get(..n).ok_or(Error::InsufficientLength {
        required: n,
        available: symbols.len(),
    })?;
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    // trie edges: (node, symbol) -> child; node 0 is the empty phrase
    let mut children: HashMap<(u32, Symbol), u32> = HashMap::new();
    let mut next_node = 1u32;
    let mut boundaries = Vec::new();
    let mut pos = 0;
    while pos < n {
        let mut node = 0u32;
        while pos < n {
            let s = input[pos];
            pos += 1;
            match children.get(&(node, s)) {
                Some(&child) => node = child,
                None => {
                    children.insert((node, s), next_node);
                    next_node += 1;
                    break;
                }
            }
        }
        boundaries.push(pos);
    }
    Ok(Parsing::from_sorted_unchecked(n, boundaries))
}

/// `c_target - 1` interior boundaries drawn uniformly without replacement.
pub fn parse_random_sublinear(n: usize, c_target: usize, seed: u64) -> Result<Parsing> {
    if c_target == 0 || c_target > n {
        return Err(Error::InvalidParameter(format!(
            "block budget must satisfy 1 <= c <= N, got c = {c_target}, N = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boundaries: Vec<usize> = rand::seq::index::sample(&mut rng, n - 1, c_target - 1)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    boundaries.sort_unstable();
    boundaries.push(n);
    Ok(Parsing::from_sorted_unchecked(n, boundaries))
}

/// Deterministic `u`-parsing: blocks of length `K`, as [`parse_fixed`].
pub fn parse_counterexample_u(n: usize, k: usize) -> Result<Parsing> {
    check_counterexample_k(k)?;
    parse_fixed(n, k)
}

fn check_counterexample_k(k: usize) -> Result<()> {
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("K must be even and positive, got {k}")));
    }
    Ok(())
}

/// Where the data-dependent parsing cuts off its tail block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CounterexampleSplit {
    /// 1-based start `k` of the tail block `x_k^N`.
    pub k: usize,
    /// `|-ln P([x_k^N]) / (N - k + 1) - h_ref|`.
    pub deviation: f64,
    pub window: (usize, usize),
}

const ARGMIN_TIE_TOL: f64 = 1e-12;

/// Picks `k` in `[ceil((1/2 - eps) N), floor(N / 2)]` whose tail block has
/// per-symbol information closest to `h_ref`; smallest `k` among ties.
pub fn counterexample_split(
    model: &ProcessModel,
    symbols: &[Symbol],
    n: usize,
    k_block: usize,
    h_ref: f64,
    epsilon: f64,
) -> Result<CounterexampleSplit> {
    check_counterexample_k(k_block)?;
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/4), got {epsilon}")));
    }
    let prefix = symbols.get(..n).ok_or(Error::InsufficientLength {
        required: n,
        available: symbols.len(),
    })?;
    if n < 2 * k_block {
        return Err(Error::WindowEmpty { n });
    }
    // guard the ceiling against products like 0.4 * 1000 = 400.00000000000006
    let lo = (((0.5 - epsilon) * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let hi = n / 2;
    if lo > hi {
        return Err(Error::WindowEmpty { n });
    }
    let suffix = suffix_log_probs(model, prefix);
    let deviation = |k: usize| -> Result<f64> {
        let lp = suffix[k - 1];
        if lp == f64::NEG_INFINITY {
            return Err(Error::OutOfSupport);
        }
        Ok((-lp / (n - k + 1) as f64 - h_ref).abs())
    };
    let mut best = (lo, deviation(lo)?);
    for k in lo + 1..=hi {
        let d = deviation(k)?;
        if d < best.1 - ARGMIN_TIE_TOL {
            best = (k, d);
        }
    }
    Ok(CounterexampleSplit {
        k: best.0,
        deviation: best.1,
        window: (lo, hi),
    })
}

/// Data-dependent `v`-parsing: blocks of length `K/2` over `x_1^{k-1}` (a
/// shorter block just before the tail if needed), then the tail `x_k^N`.
pub fn parse_counterexample_v(
    model: &ProcessModel,
    symbols: &[Symbol],
    n: usize,
    k_block: usize,
    h_ref: f64,
    epsilon: f64,
) -> Result<Parsing> {
    let split = counterexample_split(model, symbols, n, k_block, h_ref, epsilon)?;
    let head = split.k - 1;
    let half = k_block / 2;
    let mut boundaries: Vec<usize> = (1..=head / half).map(|i| i * half).collect();
    if head % half != 0 {
        boundaries.push(head);
    }
    boundaries.push(n);
    Ok(Parsing::from_sorted_unchecked(n, boundaries))
}

/// `u` on even `N`, `v` on odd `N`.
pub fn parse_counterexample_w(
    model: &ProcessModel,
    symbols: &[Symbol],
    n: usize,
    k_block: usize,
    h_ref: f64,
    epsilon: f64,
) -> Result<Parsing> {
    check_counterexample_k(k_block)?;
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/4), got {epsilon}")));
    }
    if n < 2 * k_block {
        return Err(Error::WindowEmpty { n });
    }
    if n.is_multiple_of(2) {
        parse_fixed(n, k_block)
    } else {
        parse_counterexample_v(model, symbols, n, k_block, h_ref, epsilon)
    }
}
