use serde::Serialize;

use crate::error::Result;
use crate::measures::{block_entropies, default_entropy_rate, EntropyBracket, ProcessModel, Source};
use crate::parsing::ParserSpec;

/// An oracle limit, exact or bracketed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Target {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Target {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            lower: value,
            upper: value,
        }
    }

    pub fn bracket(lower: f64, upper: f64) -> Self {
        Self {
            value: 0.5 * (lower + upper),
            lower,
            upper,
        }
    }

    /// Distance from `x` to `[lower, upper]`.
    pub fn deviation(&self, x: f64) -> f64 {
        if x < self.lower {
            self.lower - x
        } else if x > self.upper {
            x - self.upper
        } else {
            0.0
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

impl From<EntropyBracket> for Target {
    fn from(b: EntropyBracket) -> Self {
        Target::bracket(b.lower, b.upper)
    }
}

/// Limits of every parser family on one ergodic source, computed before any
/// sampling takes place.
#[derive(Debug, Clone, Serialize)]
pub struct OracleTargets {
    pub model_id: String,
    pub rate: EntropyBracket,
    /// `K` and `H(P_K) / K` for the fixed-length families.
    pub fixed: Option<(usize, f64)>,
    /// `(2 H(P_{K/2}) / K + h) / 2`, bracketed through `h`.
    pub split: Option<Target>,
}

impl OracleTargets {
    pub fn new(model: &ProcessModel, spec: &ParserSpec) -> Result<Self> {
        let rate = default_entropy_rate(model)?;
        let k = match *spec {
            ParserSpec::Fixed { k }
            | ParserSpec::CounterexampleU { k }
            | ParserSpec::CounterexampleV { k, .. }
            | ParserSpec::CounterexampleW { k, .. } => Some(k),
            _ => None,
        };
        let (mut fixed, mut split) = (None, None);
        if let Some(k) = k {
            let h = block_entropies(model, k)?;
            fixed = Some((k, h[k - 1] / k as f64));
            if k % 2 == 0 {
                let head = h[k / 2 - 1] / k as f64;
                split = Some(Target::bracket(head + 0.5 * rate.lower, head + 0.5 * rate.upper));
            }
        }
        Ok(Self {
            model_id: model.id().to_owned(),
            rate,
            fixed,
            split,
        })
    }

    /// One oracle per ergodic component: the model itself, or both
    /// components of a mixture.
    pub fn per_component(model: &ProcessModel, spec: &ParserSpec) -> Result<Vec<Self>> {
        match model.source() {
            Source::Mixture(m) => m.components.iter().map(|c| Self::new(c, spec)).collect(),
            _ => Ok(vec![Self::new(model, spec)?]),
        }
    }

    /// The limit of `spec` at prefix length `n`.
    ///
    /// Sublinear families converge to the entropy rate. Fixed-length and `u`
    /// parsings converge to `H(P_K)/K`, the `v` parsing to the split limit,
    /// and `w` alternates between the two with the parity of `n`.
    pub fn target(&self, spec: &ParserSpec, n: usize) -> Target {
        let fixed = || Target::exact(self.fixed.expect("fixed limit computed").1);
        let split = || self.split.expect("split limit computed");
        match spec {
            ParserSpec::Fixed { .. } | ParserSpec::CounterexampleU { .. } => fixed(),
            ParserSpec::CounterexampleV { .. } => split(),
            ParserSpec::CounterexampleW { .. } if n.is_multiple_of(2) => fixed(),
            ParserSpec::CounterexampleW { .. } => split(),
            _ => self.rate.into(),
        }
    }
}
