//! Exact block entropies by cylinder enumeration, and entropy-rate brackets.

use serde::Serialize;

use super::cursor::Cursor;
use super::model::{ProcessModel, Source, Symbol};
use crate::error::{Error, Result};
use crate::numeric::{shannon_entropy, CompensatedSum};

/// Largest number of length-`n` words any enumeration will visit.
pub const ENUMERATION_CAP: u64 = 1 << 22;

pub const DEFAULT_RATE_TOL: f64 = 1e-5;
pub const DEFAULT_RATE_N_CAP: usize = 22;

/// Fails with `CapExceeded` when `|A|^n > cap`.
pub fn check_cap(alphabet_size: usize, n: usize, cap: u64) -> Result<()> {
    let mut atoms: u128 = 1;
    for _ in 0..n {
        atoms = atoms.saturating_mul(alphabet_size as u128);
        if atoms > cap as u128 {
            return Err(Error::CapExceeded { atoms, cap });
        }
    }
    Ok(())
}

/// Depth-first walk over every in-support word of length `1..=depth`.
///
/// `visit(word, ln P([word]))` is called once per node; zero-probability
/// branches are pruned since every extension of them is also null.
pub fn walk_cylinders<F>(model: &ProcessModel, depth: usize, mut visit: F) -> Result<()>
where
    F: FnMut(&[Symbol], f64),
{
    check_cap(model.alphabet().size(), depth, ENUMERATION_CAP)?;
    let mut word = Vec::with_capacity(depth);
    walk(model.alphabet().size(), &Cursor::new(model), depth, &mut word, &mut visit);
    Ok(())
}

fn walk<F>(size: usize, cursor: &Cursor<'_>, depth: usize, word: &mut Vec<Symbol>, visit: &mut F)
where
    F: FnMut(&[Symbol], f64),
{
    if word.len() == depth {
        return;
    }
    for a in 0..size {
        let mut next = cursor.clone();
        let lp = next.push(a as Symbol);
        if lp == f64::NEG_INFINITY {
            continue;
        }
        word.push(a as Symbol);
        visit(word, lp);
        walk(size, &next, depth, word, visit);
        word.pop();
    }
}

/// `[H(P_1), .., H(P_depth)]` from one enumeration pass.
pub fn block_entropies(model: &ProcessModel, depth: usize) -> Result<Vec<f64>> {
    let mut sums = vec![CompensatedSum::default(); depth];
    walk_cylinders(model, depth, |word, lp| {
        sums[word.len() - 1].add(-lp.exp() * lp);
    })?;
    Ok(sums.iter().map(CompensatedSum::value).collect())
}

/// `H(P_n)` in nats; `H(P_0) = 0`.
pub fn marginal_entropy(model: &ProcessModel, n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    Ok(block_entropies(model, n)?[n - 1])
}

/// `beta_n = H(P_n) - H(P_{n-1})` for `n = 1..=n_max`.
pub fn beta_sequence(model: &ProcessModel, n_max: usize) -> Result<Vec<f64>> {
    let h = block_entropies(model, n_max)?;
    Ok((0..n_max)
        .map(|i| h[i] - if i == 0 { 0.0 } else { h[i - 1] })
        .collect())
}

/// Lower and upper bound on the entropy rate, nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyBracket {
    pub lower: f64,
    pub upper: f64,
    /// Block length at which the bracket was evaluated (0 for closed forms).
    pub n_used: usize,
    /// False when the enumeration cap stopped refinement before `tol`.
    pub converged: bool,
}

impl EntropyBracket {
    fn exact(h: f64) -> Self {
        Self {
            lower: h,
            upper: h,
            n_used: 0,
            converged: true,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lower - slack && x <= self.upper + slack
    }
}

/// Entropy rate of `model`.
///
/// Closed forms for i.i.d. and Markov sources. Hidden-Markov sources get the
/// sandwich `H(X_n | X_1^{n-1}, S_1) <= h <= H(X_n | X_1^{n-1})`, refined in
/// `n` until the width is at most `tol` or `n_cap` / the enumeration cap is
/// reached (then `converged == false`). Mixtures report the hull of their
/// components' brackets.
pub fn entropy_rate(model: &ProcessModel, tol: f64, n_cap: usize) -> Result<EntropyBracket> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    match model.source() {
        Source::Iid(m) => Ok(EntropyBracket::exact(shannon_entropy(&m.p))),
        Source::Markov(m) => {
            let h = m
                .initial
                .iter()
                .enumerate()
                .map(|(a, &pi)| pi * shannon_entropy(m.transition.row(a)))
                .collect::<CompensatedSum>()
                .value();
            Ok(EntropyBracket::exact(h))
        }
        Source::HiddenMarkov(h) => hmm_bracket(model, &h.initial, tol, n_cap),
        Source::Mixture(m) => {
            let a = entropy_rate(&m.components[0], tol, n_cap)?;
            let b = entropy_rate(&m.components[1], tol, n_cap)?;
            Ok(EntropyBracket {
                lower: a.lower.min(b.lower),
                upper: a.upper.max(b.upper),
                n_used: a.n_used.max(b.n_used),
                converged: a.converged && b.converged,
            })
        }
    }
}

pub fn default_entropy_rate(model: &ProcessModel) -> Result<EntropyBracket> {
    entropy_rate(model, DEFAULT_RATE_TOL, DEFAULT_RATE_N_CAP)
}

fn hmm_bracket(model: &ProcessModel, initial: &[f64], tol: f64, n_cap: usize) -> Result<EntropyBracket> {
    let started: Vec<(f64, ProcessModel)> = initial
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(s, &w)| (w, model.hmm_started_in(s).expect("hidden-Markov source")))
        .collect();
    // H(X_1^n | S_1) for the current n
    let conditional = |n: usize| -> Result<f64> {
        let mut acc = CompensatedSum::default();
        for (w, m) in &started {
            acc.add(w * marginal_entropy(m, n)?);
        }
        Ok(acc.value())
    };
    let size = model.alphabet().size();
    let (mut prev_h, mut prev_c) = (0.0, 0.0);
    let mut best: Option<EntropyBracket> = None;
    for n in 1..=n_cap.max(1) {
        if check_cap(size, n, ENUMERATION_CAP).is_err() {
            break;
        }
        let h_n = marginal_entropy(model, n)?;
        let c_n = conditional(n)?;
        let bracket = EntropyBracket {
            lower: c_n - prev_c,
            upper: h_n - prev_h,
            n_used: n,
            converged: false,
        };
        prev_h = h_n;
        prev_c = c_n;
        if bracket.width() <= tol {
            return Ok(EntropyBracket {
                converged: true,
                ..bracket
            });
        }
        best = Some(bracket);
    }
    best.ok_or(Error::CapExceeded {
        atoms: size as u128,
        cap: ENUMERATION_CAP,
    })
}

/// Both sides of the sharpness inequality for even block length `k`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiscrepancyGap {
    pub k: usize,
    /// `H(P_K) / K`, the limit of the fixed-length parsing.
    pub fixed_limit: f64,
    /// `(2 H(P_{K/2}) / K + h) / 2`, the limit of the data-dependent parsing.
    pub split_limit: f64,
    /// `fixed_limit - split_limit`.
    pub gap: f64,
    pub rate: EntropyBracket,
}

impl DiscrepancyGap {
    /// Width of the entropy-rate bracket; the gap is only resolved beyond it.
    pub fn bracket_width(&self) -> f64 {
        self.rate.width()
    }
}

pub fn discrepancy_gap(model: &ProcessModel, k: usize) -> Result<DiscrepancyGap> {
    discrepancy_gap_with(model, k, DEFAULT_RATE_TOL, DEFAULT_RATE_N_CAP)
}

pub fn discrepancy_gap_with(
    model: &ProcessModel,
    k: usize,
    tol: f64,
    n_cap: usize,
) -> Result<DiscrepancyGap> {
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("K must be even and positive, got {k}")));
    }
    let h = block_entropies(model, k)?;
    let rate = entropy_rate(model, tol, n_cap)?;
    let fixed_limit = h[k - 1] / k as f64;
    let split_limit = 0.5 * (2.0 * h[k / 2 - 1] / k as f64 + rate.midpoint());
    Ok(DiscrepancyGap {
        k,
        fixed_limit,
        split_limit,
        gap: fixed_limit - split_limit,
        rate,
    })
}
