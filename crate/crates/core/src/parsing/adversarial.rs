//! Greedy parser that places block boundaries where splitting distorts the
//! factorization `P([uv]) ~ P([u]) P([v])` the most.

use serde::Serialize;

use super::Parsing;
use crate::error::{Error, Result};
use crate::measures::{prefix_log_probs, suffix_log_probs, ProcessModel, Source, Symbol};

// Penalties are differences of O(N)-sized log probabilities; values closer
// than this are treated as ties and resolved toward the smaller index.
const TIE_TOL: f64 = 1e-9;

/// One greedy placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreedyStep {
    /// New boundary: the right part starts at this 0-based index.
    pub position: usize,
    pub penalty: f64,
}

/// `|ln P([x_a^t)]) + ln P([x_t^b)]) - ln P([x_a^b)])|` for splitting the
/// block `symbols[a..b]` at `t`, evaluated directly.
pub fn split_penalty(model: &ProcessModel, symbols: &[Symbol], a: usize, t: usize, b: usize) -> Result<f64> {
    if !(a < t && t < b && b <= symbols.len()) {
        return Err(Error::InvalidParameter(format!("bad split {a} < {t} < {b}")));
    }
    let lp = |r: std::ops::Range<usize>| crate::measures::log_prob_unchecked(model, &symbols[r]);
    let (left, right, whole) = (lp(a..t), lp(t..b), lp(a..b));
    if whole == f64::NEG_INFINITY {
        return Err(Error::OutOfSupport);
    }
    Ok((left + right - whole).abs())
}

pub fn parse_adversarial(model: &ProcessModel, symbols: &[Symbol], n: usize, c_target: usize) -> Result<Parsing> {
    parse_adversarial_traced(model, symbols, n, c_target).map(|(p, _)| p)
}

/// Greedy parsing together with the sequence of placements.
///
/// Each step adds the boundary with the largest penalty with respect to the
/// blocks present at that step (smallest index among ties), so penalties
/// are re-evaluated after every placement. For i.i.d. and first-order Markov
/// sources the penalty of a position does not depend on the enclosing block
/// (`0` and `|ln pi(x_t) - ln p(x_{t-1} -> x_t)|` respectively) and the greedy
/// order reduces to a single sort.
pub fn parse_adversarial_traced(
    model: &ProcessModel,
    symbols: &[Symbol],
    n: usize,
    c_target: usize,
) -> Result<(Parsing, Vec<GreedyStep>)> {
    if c_target == 0 || c_target > n {
        return Err(Error::InvalidParameter(format!(
            "block budget must satisfy 1 <= c <= N, got c = {c_target}, N = {n}"
        )));
    }
    let x = symbols.get(..n).ok_or(Error::InsufficientLength {
        required: n,
        available: symbols.len(),
    })?;
    let steps = match model.source() {
        Source::Iid(_) => local_greedy(n, c_target - 1, |_| 0.0),
        Source::Markov(m) => {
            if crate::measures::log_prob_unchecked(model, x) == f64::NEG_INFINITY {
                return Err(Error::OutOfSupport);
            }
            local_greedy(n, c_target - 1, |t| {
                (m.log_initial[x[t] as usize] - m.log_step(x[t - 1], x[t])).abs()
            })
        }
        _ => block_greedy(model, x, c_target - 1)?,
    };
    let mut boundaries: Vec<usize> = steps.iter().map(|s| s.position).collect();
    boundaries.sort_unstable();
    boundaries.push(n);
    Ok((Parsing::from_sorted_unchecked(n, boundaries), steps))
}

fn local_greedy(n: usize, picks: usize, penalty: impl Fn(usize) -> f64) -> Vec<GreedyStep> {
    let mut candidates: Vec<GreedyStep> = (1..n)
        .map(|t| GreedyStep {
            position: t,
            penalty: penalty(t),
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.penalty
            .total_cmp(&a.penalty)
            .then(a.position.cmp(&b.position))
    });
    candidates.truncate(picks);
    candidates
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    end: usize,
    best: Option<GreedyStep>,
}

fn best_split(model: &ProcessModel, x: &[Symbol], start: usize, end: usize) -> Result<Option<GreedyStep>> {
    if end - start < 2 {
        return Ok(None);
    }
    let block = &x[start..end];
    let prefix = prefix_log_probs(model, block);
    let suffix = suffix_log_probs(model, block);
    let whole = prefix[block.len() - 1];
    if whole == f64::NEG_INFINITY {
        return Err(Error::OutOfSupport);
    }
    let mut best: Option<GreedyStep> = None;
    for t in 1..block.len() {
        let penalty = (prefix[t - 1] + suffix[t] - whole).abs();
        if best.is_none_or(|b| penalty > b.penalty + TIE_TOL) {
            best = Some(GreedyStep {
                position: start + t,
                penalty,
            });
        }
    }
    Ok(best)
}

fn block_greedy(model: &ProcessModel, x: &[Symbol], picks: usize) -> Result<Vec<GreedyStep>> {
    let mut blocks = vec![Block {
        start: 0,
        end: x.len(),
        best: best_split(model, x, 0, x.len())?,
    }];
    let mut steps = Vec::with_capacity(picks);
    for _ in 0..picks {
        let mut chosen: Option<(usize, GreedyStep)> = None;
        for (i, b) in blocks.iter().enumerate() {
            let Some(cand) = b.best else { continue };
            let better = match chosen {
                None => true,
                Some((_, cur)) => {
                    cand.penalty > cur.penalty + TIE_TOL
                        || (cand.penalty >= cur.penalty - TIE_TOL && cand.position < cur.position)
                }
            };
            if better {
                chosen = Some((i, cand));
            }
        }
        let Some((i, step)) = chosen else { break };
        let Block { start, end, .. } = blocks[i];
        let t = step.position;
        blocks[i] = Block {
            start,
            end: t,
            best: best_split(model, x, start, t)?,
        };
        blocks.push(Block {
            start: t,
            end,
            best: best_split(model, x, t, end)?,
        });
        steps.push(step);
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{reference, sample_trajectory};

    /// Replays the greedy run: every step's penalty dominates every
    /// untried position's penalty under the blocks present at that step.
    fn assert_greedy(model: &ProcessModel, symbols: &[Symbol], steps: &[GreedyStep], n: usize) {
        let mut cuts = vec![0usize, n];
        for step in steps {
            for t in 1..n {
                if cuts.contains(&t) {
                    continue;
                }
                let i = cuts.partition_point(|&c| c < t);
                let (a, b) = (cuts[i - 1], cuts[i]);
                let p = split_penalty(model, symbols, a, t, b).unwrap();
                assert!(p <= step.penalty + 1e-8, "position {t} beats step {step:?}: {p}");
            }
            let i = cuts.partition_point(|&c| c < step.position);
            let direct = split_penalty(model, symbols, cuts[i - 1], step.position, cuts[i]).unwrap();
            assert!((direct - step.penalty).abs() < 1e-8);
            cuts.insert(i, step.position);
        }
    }

    #[test]
    fn iid_takes_first_positions() {
        let m = reference::iid_bernoulli(0.3);
        let t = sample_trajectory(&m, 50, 1).unwrap();
        let p = parse_adversarial(&m, t.symbols(), 50, 6).unwrap();
        assert_eq!(p.boundaries(), &[1, 2, 3, 4, 5, 50]);
    }

    #[test]
    fn markov_greedy_replay() {
        let m = reference::m1();
        let t = sample_trajectory(&m, 100, 3).unwrap();
        let (p, steps) = parse_adversarial_traced(&m, t.symbols(), 100, 5).unwrap();
        assert_eq!(p.block_count(), 5);
        assert_eq!(steps.len(), 4);
        assert_greedy(&m, t.symbols(), &steps, 100);
    }

    #[test]
    fn hmm_greedy_replay() {
        let m = reference::h1();
        let t = sample_trajectory(&m, 120, 5).unwrap();
        let (p, steps) = parse_adversarial_traced(&m, t.symbols(), 120, 8).unwrap();
        assert_eq!(p.block_count(), 8);
        assert_greedy(&m, t.symbols(), &steps, 120);
    }

    #[test]
    fn mixture_greedy_replay() {
        let m = reference::mixture_m1_uniform();
        let t = sample_trajectory(&m, 80, 5).unwrap();
        let (_, steps) = parse_adversarial_traced(&m, t.symbols(), 80, 6).unwrap();
        assert_greedy(&m, t.symbols(), &steps, 80);
    }

    #[test]
    fn budget_bounds() {
        let m = reference::m1();
        let t = sample_trajectory(&m, 10, 5).unwrap();
        assert!(parse_adversarial(&m, t.symbols(), 10, 11).is_err());
        assert_eq!(parse_adversarial(&m, t.symbols(), 10, 1).unwrap().boundaries(), &[10]);
        assert_eq!(parse_adversarial(&m, t.symbols(), 10, 10).unwrap().block_count(), 10);
    }
}
