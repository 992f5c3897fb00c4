//! Parsings `x_1^N = w_1 w_2 .. w_c` of trajectory prefixes.

mod adversarial;
mod generators;
mod perturb;
mod spec;

use std::fmt::Write as _;
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};

pub use adversarial::{parse_adversarial, parse_adversarial_traced, split_penalty, GreedyStep};
pub(crate) use generators::floor_sqrt;
pub use generators::{
    counterexample_split, parse_counterexample_u, parse_counterexample_v, parse_counterexample_w,
    parse_fixed, parse_growing, parse_lz78, parse_random_sublinear, CounterexampleSplit,
    GrowthSchedule,
};
pub use perturb::{
    check_perturbation, perturb_subblocks, perturb_superblocks, OverlapPolicy, PerturbationPlan,
    PerturbedParsing,
};
pub use spec::{sublinearity_series, Budget, ParseInput, ParserSpec, SublinearityPoint, SublinearitySeries};

/// Block boundaries `0 = L_0 < L_1 < .. < L_c = N`; `L_0` is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Parsing {
    n: usize,
    boundaries: Vec<usize>,
}

impl Parsing {
    /// Checked constructor; `boundaries` excludes the leading zero.
    pub fn new(n: usize, boundaries: Vec<usize>) -> Result<Self> {
        let report = validate_parsing(&boundaries, n);
        if !report.pass() {
            return Err(Error::InvalidParsing(report.issues.join("; ")));
        }
        Ok(Self { n, boundaries })
    }

    pub(crate) fn from_sorted_unchecked(n: usize, boundaries: Vec<usize>) -> Self {
        debug_assert!(validate_parsing(&boundaries, n).pass());
        Self { n, boundaries }
    }

    pub fn single_block(n: usize) -> Result<Self> {
        Self::new(n, vec![n])
    }

    /// Prefix length `N`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Block count `c_N`.
    pub fn block_count(&self) -> usize {
        self.boundaries.len()
    }

    /// `L_1, .., L_c`.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Half-open symbol ranges of the blocks.
    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        std::iter::once(0)
            .chain(self.boundaries.iter().copied())
            .zip(self.boundaries.iter().copied())
            .map(|(a, b)| a..b)
    }

    pub fn block(&self, i: usize) -> Range<usize> {
        let start = if i == 0 { 0 } else { self.boundaries[i - 1] };
        start..self.boundaries[i]
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.blocks().map(|r| r.len()).collect()
    }

    pub fn density(&self) -> f64 {
        self.block_count() as f64 / self.n as f64
    }

    /// Three lines: `N`, `c`, then the space-separated boundaries `L_1 .. L_c`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n{}\n", self.n, self.block_count());
        for (i, b) in self.boundaries.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{b}").expect("write to string");
        }
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut field = |name: &str| {
            lines
                .next()
                .ok_or_else(|| Error::InvalidParsing(format!("missing {name} line")))
        };
        let n: usize = field("N")?
            .trim()
            .parse()
            .map_err(|e| Error::InvalidParsing(format!("bad N: {e}")))?;
        let c: usize = field("c")?
            .trim()
            .parse()
            .map_err(|e| Error::InvalidParsing(format!("bad c: {e}")))?;
        let boundaries = field("boundary")?
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| Error::InvalidParsing(format!("bad boundary {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if boundaries.len() != c {
            return Err(Error::InvalidParsing(format!(
                "declared c = {c} but {} boundaries listed",
                boundaries.len()
            )));
        }
        Self::new(n, boundaries)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParsingReport {
    pub strictly_increasing: bool,
    pub covers_prefix: bool,
    pub count_within_n: bool,
    pub issues: Vec<String>,
}

impl ParsingReport {
    pub fn pass(&self) -> bool {
        self.strictly_increasing && self.covers_prefix && self.count_within_n
    }
}

/// Checks that `0 < L_1 < .. < L_c = n` and `c <= n`.
pub fn validate_parsing(boundaries: &[usize], n: usize) -> ParsingReport {
    let mut issues = Vec::new();
    let mut prev = 0usize;
    let mut strictly_increasing = true;
    for (i, &b) in boundaries.iter().enumerate() {
        if b <= prev {
            strictly_increasing = false;
            issues.push(format!("boundary {i} = {b} does not exceed {prev}"));
            break;
        }
        prev = b;
    }
    let covers_prefix = n > 0 && boundaries.last() == Some(&n);
    if !covers_prefix {
        issues.push(format!(
            "last boundary {:?} does not equal N = {n}",
            boundaries.last()
        ));
    }
    let count_within_n = boundaries.len() <= n;
    if !count_within_n {
        issues.push(format!("{} blocks exceed N = {n}", boundaries.len()));
    }
    ParsingReport {
        strictly_increasing,
        covers_prefix,
        count_within_n,
        issues,
    }
}
