//! Incremental and batch evaluation of log cylinder probabilities.
//!
//! A [`Cursor`] extends a word one symbol at a time and tracks
//! `ln P([x_1^n])`. The batch helpers compute all prefix or all suffix
//! cylinder probabilities of a word in a single linear pass, which is what
//! the parsers and estimators use on long trajectories.

use serde::Serialize;

use super::model::{ProcessModel, Source, Symbol};
use crate::error::{Error, Result};
use crate::numeric::log_add_exp;

/// Natural-log probability; `-inf` marks a word outside the support.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO_PROB: LogProb = LogProb(f64::NEG_INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value > 0.0 {
            return Err(Error::InvalidParameter(format!(
                "log probability must be <= 0, got {value}"
            )));
        }
        Ok(Self(value))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn in_support(self) -> bool {
        self.0 > f64::NEG_INFINITY
    }

    /// The value, or `OutOfSupport` for `-inf`.
    pub fn finite(self) -> Result<f64> {
        if self.in_support() {
            Ok(self.0)
        } else {
            Err(Error::OutOfSupport)
        }
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }
}

#[derive(Debug, Clone)]
enum State<'m> {
    Iid,
    Markov { last: Option<Symbol> },
    // Normalized predictive distribution of the next hidden state.
    Hidden { predictive: Vec<f64> },
    Mixture(Box<[Cursor<'m>; 2]>),
}

#[derive(Debug, Clone)]
pub struct Cursor<'m> {
    model: &'m ProcessModel,
    state: State<'m>,
    log_prob: f64,
    len: usize,
}

impl<'m> Cursor<'m> {
    pub fn new(model: &'m ProcessModel) -> Self {
        let state = match model.source() {
            Source::Iid(_) => State::Iid,
            Source::Markov(_) => State::Markov { last: None },
            Source::HiddenMarkov(h) => State::Hidden {
                predictive: h.initial.clone(),
            },
            Source::Mixture(m) => State::Mixture(Box::new([
                Cursor::new(&m.components[0]),
                Cursor::new(&m.components[1]),
            ])),
        };
        Self {
            model,
            state,
            log_prob: 0.0,
            len: 0,
        }
    }

    #[inline]
    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Appends `symbol` and returns the log probability of the extended word.
    pub fn push(&mut self, symbol: Symbol) -> f64 {
        debug_assert!(self.model.alphabet().contains(symbol));
        self.len += 1;
        if self.log_prob == f64::NEG_INFINITY {
            return self.log_prob;
        }
        let x = symbol as usize;
        match (&mut self.state, self.model.source()) {
            (State::Iid, Source::Iid(m)) => self.log_prob += m.log_p[x],
            (State::Markov { last }, Source::Markov(m)) => {
                self.log_prob += match *last {
                    None => m.log_initial[x],
                    Some(prev) => m.log_step(prev, symbol),
                };
                *last = Some(symbol);
            }
            (State::Hidden { predictive }, Source::HiddenMarkov(h)) => {
                let states = predictive.len();
                let mut mass = 0.0;
                let mut filtered = [0.0f64; 16];
                let mut filtered_heap;
                let filtered: &mut [f64] = if states <= 16 {
                    &mut filtered[..states]
                } else {
                    filtered_heap = vec![0.0; states];
                    &mut filtered_heap
                };
                for (s, f) in filtered.iter_mut().enumerate() {
                    *f = predictive[s] * h.emission.get(s, x);
                    mass += *f;
                }
                if mass <= 0.0 {
                    self.log_prob = f64::NEG_INFINITY;
                    return self.log_prob;
                }
                self.log_prob += mass.ln();
                predictive.iter_mut().for_each(|p| *p = 0.0);
                for (s, &f) in filtered.iter().enumerate() {
                    if f == 0.0 {
                        continue;
                    }
                    let w = f / mass;
                    for (p, &q) in predictive.iter_mut().zip(h.transition.row(s)) {
                        *p += w * q;
                    }
                }
            }
            (State::Mixture(parts), Source::Mixture(m)) => {
                let a = parts[0].push(symbol);
                let b = parts[1].push(symbol);
                self.log_prob = log_add_exp(m.weight.ln() + a, (1.0 - m.weight).ln() + b);
            }
            _ => unreachable!("cursor state does not match model"),
        }
        self.log_prob
    }

    pub fn extend(&mut self, word: &[Symbol]) -> f64 {
        for &s in word {
            self.push(s);
        }
        self.log_prob
    }
}

/// `ln P([word])` for an already-validated word; empty word gives 0.
pub(crate) fn log_prob_unchecked(model: &ProcessModel, word: &[Symbol]) -> f64 {
    Cursor::new(model).extend(word)
}

/// Exact `ln P([word])`.
pub fn log_cylinder_prob(model: &ProcessModel, word: &[Symbol]) -> Result<LogProb> {
    if word.is_empty() {
        return Err(Error::InvalidParameter("word must be non-empty".into()));
    }
    model.alphabet().check_word(word)?;
    Ok(LogProb(log_prob_unchecked(model, word)))
}

/// `out[i] = ln P([word[..=i]])`.
pub fn prefix_log_probs(model: &ProcessModel, word: &[Symbol]) -> Vec<f64> {
    let mut cursor = Cursor::new(model);
    word.iter().map(|&s| cursor.push(s)).collect()
}

/// `out[k] = ln P([word[k..]])` for `k in 0..=len`, with `out[len] = 0`.
///
/// Linear time for every source: cumulative sums for i.i.d. and Markov
/// sources, a scaled backward recursion for hidden-Markov sources.
pub fn suffix_log_probs(model: &ProcessModel, word: &[Symbol]) -> Vec<f64> {
    let n = word.len();
    let mut out = vec![0.0; n + 1];
    match model.source() {
        Source::Iid(m) => {
            for k in (0..n).rev() {
                out[k] = out[k + 1] + m.log_p[word[k] as usize];
            }
        }
        Source::Markov(m) => {
            // acc = sum of transition logs from k to the end
            let mut acc = 0.0;
            for k in (0..n).rev() {
                if k + 1 < n {
                    acc += m.log_step(word[k], word[k + 1]);
                }
                out[k] = m.log_initial[word[k] as usize] + acc;
            }
        }
        Source::HiddenMarkov(h) => {
            let states = h.hidden_states();
            // backward[s] * exp(log_scale) = P(x_k.. | H_k = s)
            let mut backward = vec![1.0; states];
            let mut next = vec![0.0; states];
            let mut log_scale = 0.0;
            let mut dead = false;
            for k in (0..n).rev() {
                if dead {
                    out[k] = f64::NEG_INFINITY;
                    continue;
                }
                let x = word[k] as usize;
                let mut norm = 0.0;
                for (s, nx) in next.iter_mut().enumerate() {
                    let carry: f64 = h
                        .transition
                        .row(s)
                        .iter()
                        .zip(&backward)
                        .map(|(q, b)| q * b)
                        .sum();
                    // at the last position the carry is exactly one
                    let carry = if k + 1 == n { 1.0 } else { carry };
                    *nx = h.emission.get(s, x) * carry;
                    norm += *nx;
                }
                if norm <= 0.0 {
                    dead = true;
                    out[k] = f64::NEG_INFINITY;
                    continue;
                }
                log_scale += norm.ln();
                for (b, nx) in backward.iter_mut().zip(&next) {
                    *b = nx / norm;
                }
                let start: f64 = h.initial.iter().zip(&backward).map(|(r, b)| r * b).sum();
                out[k] = if start > 0.0 {
                    log_scale + start.ln()
                } else {
                    f64::NEG_INFINITY
                };
            }
        }
        Source::Mixture(m) => {
            let a = suffix_log_probs(&m.components[0], word);
            let b = suffix_log_probs(&m.components[1], word);
            let (la, lb) = (m.weight.ln(), (1.0 - m.weight).ln());
            for k in 0..n {
                out[k] = log_add_exp(la + a[k], lb + b[k]);
            }
        }
    }
    out
}
