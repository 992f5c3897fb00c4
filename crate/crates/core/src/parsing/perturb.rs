//! Sub-block and super-block perturbations of a parsing.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::Parsing;
use crate::error::{Error, Result};

/// Perturbed blocks `w~_i`, one interval per original block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerturbedParsing {
    /// `(start, length)`, 0-based.
    intervals: Vec<(usize, usize)>,
    origin: Parsing,
    total_length: usize,
    /// Symbols trimmed plus symbols added.
    modification: usize,
}

impl PerturbedParsing {
    pub fn identity(origin: &Parsing) -> Self {
        let intervals = origin.blocks().map(|r| (r.start, r.len())).collect();
        Self {
            intervals,
            origin: origin.clone(),
            total_length: origin.len(),
            modification: 0,
        }
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.intervals.iter().map(|&(s, l)| s..s + l)
    }

    pub fn origin(&self) -> &Parsing {
        &self.origin
    }

    /// `sum_i |w~_i|`.
    pub fn total_length(&self) -> usize {
        self.total_length
    }

    pub fn modification(&self) -> usize {
        self.modification
    }

    /// Prefix length `N` of the original parsing.
    pub fn len(&self) -> usize {
        self.origin.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origin.is_empty()
    }
}

/// Replaces block `i` by `w_i` with `left` symbols dropped at the start and
/// `right` at the end.
pub fn perturb_subblocks(parsing: &Parsing, trim_plan: &[(usize, usize)]) -> Result<PerturbedParsing> {
    check_plan_len(parsing, trim_plan.len())?;
    let mut intervals = Vec::with_capacity(trim_plan.len());
    let mut modification = 0;
    for (i, (block, &(left, right))) in parsing.blocks().zip(trim_plan).enumerate() {
        if left + right >= block.len() {
            return Err(Error::TrimTooLarge {
                block: i,
                left,
                right,
                length: block.len(),
            });
        }
        intervals.push((block.start + left, block.len() - left - right));
        modification += left + right;
    }
    Ok(PerturbedParsing {
        total_length: parsing.len() - modification,
        intervals,
        origin: parsing.clone(),
        modification,
    })
}

/// How far a super-block may reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    /// Only into the immediately adjacent original blocks.
    #[default]
    NeighborsOnly,
    /// Anywhere inside `[0, N)`. Exploratory; no convergence guarantee
    /// is known for this regime.
    Unconstrained,
}

/// Replaces block `i` by `w_i` extended `left` symbols backward and `right`
/// symbols forward.
pub fn perturb_superblocks(
    parsing: &Parsing,
    extend_plan: &[(usize, usize)],
    policy: OverlapPolicy,
) -> Result<PerturbedParsing> {
    check_plan_len(parsing, extend_plan.len())?;
    let lengths = parsing.lengths();
    let c = lengths.len();
    let mut intervals = Vec::with_capacity(c);
    let mut modification = 0;
    for (i, (block, &(left, right))) in parsing.blocks().zip(extend_plan).enumerate() {
        let (max_left, max_right) = match policy {
            OverlapPolicy::NeighborsOnly => (
                if i > 0 { lengths[i - 1] } else { 0 },
                if i + 1 < c { lengths[i + 1] } else { 0 },
            ),
            OverlapPolicy::Unconstrained => (block.start, parsing.len() - block.end),
        };
        if left > max_left || right > max_right {
            return Err(Error::OverlapViolation { block: i });
        }
        intervals.push((block.start - left, block.len() + left + right));
        modification += left + right;
    }
    Ok(PerturbedParsing {
        total_length: parsing.len() + modification,
        intervals,
        origin: parsing.clone(),
        modification,
    })
}

fn check_plan_len(parsing: &Parsing, len: usize) -> Result<()> {
    if len != parsing.block_count() {
        return Err(Error::InvalidParameter(format!(
            "plan has {len} entries for {} blocks",
            parsing.block_count()
        )));
    }
    Ok(())
}

/// Re-checks a perturbed parsing against its origin without trusting how it
/// was built: every interval is non-empty and either lies inside its block or
/// contains it while meeting only the two neighbouring blocks.
pub fn check_perturbation(p: &PerturbedParsing) -> Result<()> {
    let blocks: Vec<Range<usize>> = p.origin.blocks().collect();
    if blocks.len() != p.intervals.len() {
        return Err(Error::InvalidParsing("interval count differs from block count".into()));
    }
    let mut total = 0;
    let mut changed = 0;
    for (i, (&(start, len), block)) in p.intervals.iter().zip(&blocks).enumerate() {
        let end = start + len;
        if len == 0 || end > p.origin.len() {
            return Err(Error::InvalidParsing(format!("interval {i} is empty or out of range")));
        }
        let inside = start >= block.start && end <= block.end;
        let covering = start <= block.start && end >= block.end;
        if !inside && !covering {
            return Err(Error::InvalidParsing(format!("interval {i} neither inside nor covering its block")));
        }
        if covering && !inside {
            let lo = if i > 0 { blocks[i - 1].start } else { block.start };
            let hi = blocks.get(i + 1).map_or(block.end, |b| b.end);
            if start < lo || end > hi {
                return Err(Error::OverlapViolation { block: i });
            }
        }
        total += len;
        changed += len.abs_diff(block.len());
    }
    if total != p.total_length || changed != p.modification {
        return Err(Error::InvalidParsing("recorded totals do not match intervals".into()));
    }
    Ok(())
}

/// Per-block perturbation rule applied uniformly to a parsing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationPlan {
    /// Drop up to `left` / `right` symbols, always keeping one symbol.
    Trim { left: usize, right: usize },
    /// Extend by up to `left` / `right` symbols, never past a neighbour.
    Extend { left: usize, right: usize },
    /// Drop `floor(fraction * len)` symbols from the right end, keeping one.
    TrimFraction { fraction: f64 },
}

impl PerturbationPlan {
    pub fn apply(&self, parsing: &Parsing) -> Result<PerturbedParsing> {
        let lengths = parsing.lengths();
        match *self {
            PerturbationPlan::Trim { left, right } => {
                let plan: Vec<(usize, usize)> = lengths
                    .iter()
                    .map(|&len| {
                        let l = left.min(len - 1);
                        (l, right.min(len - 1 - l))
                    })
                    .collect();
                perturb_subblocks(parsing, &plan)
            }
            PerturbationPlan::Extend { left, right } => {
                let c = lengths.len();
                let plan: Vec<(usize, usize)> = (0..c)
                    .map(|i| {
                        let l = if i > 0 { left.min(lengths[i - 1]) } else { 0 };
                        let r = if i + 1 < c { right.min(lengths[i + 1]) } else { 0 };
                        (l, r)
                    })
                    .collect();
                perturb_superblocks(parsing, &plan, OverlapPolicy::NeighborsOnly)
            }
            PerturbationPlan::TrimFraction { fraction } => {
                if !(0.0..1.0).contains(&fraction) {
                    return Err(Error::InvalidParameter(format!("fraction must lie in [0, 1), got {fraction}")));
                }
                let plan: Vec<(usize, usize)> = lengths
                    .iter()
                    .map(|&len| (0, ((fraction * len as f64) as usize).min(len - 1)))
                    .collect();
                perturb_subblocks(parsing, &plan)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            PerturbationPlan::Trim { left, right } => format!("trim({left},{right})"),
            PerturbationPlan::Extend { left, right } => format!("extend({left},{right})"),
            PerturbationPlan::TrimFraction { fraction } => format!("trim_fraction({fraction})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parsing::{parse_fixed, parse_growing, GrowthSchedule};

    #[test]
    fn zero_trim_is_identity() {
        let p = parse_fixed(10, 3).unwrap();
        let q = perturb_subblocks(&p, &vec![(0, 0); p.block_count()]).unwrap();
        assert_eq!(q.total_length(), 10);
        assert_eq!(q.modification(), 0);
        assert_eq!(q, PerturbedParsing::identity(&p));
        check_perturbation(&q).unwrap();
    }

    #[test]
    fn trim_one_per_block_is_sublinear() {
        let p = parse_growing(10_000, GrowthSchedule::Sqrt).unwrap();
        let q = perturb_subblocks(&p, &vec![(0, 1); p.block_count()]).unwrap();
        assert_eq!(q.modification(), 100);
        assert_eq!(q.total_length(), 9_900);
        check_perturbation(&q).unwrap();
    }

    #[test]
    fn trimming_whole_block_fails() {
        let p = parse_fixed(10, 5).unwrap();
        assert!(matches!(
            perturb_subblocks(&p, &[(0, 0), (2, 3)]),
            Err(Error::TrimTooLarge { block: 1, .. })
        ));
    }

    #[test]
    fn zero_extension_is_identity() {
        let p = parse_fixed(10, 3).unwrap();
        let q = perturb_superblocks(&p, &[(0, 0); 4], OverlapPolicy::NeighborsOnly).unwrap();
        assert_eq!(q.intervals(), PerturbedParsing::identity(&p).intervals());
    }

    #[test]
    fn extend_right_into_neighbour() {
        let p = parse_fixed(100, 10).unwrap();
        let lengths = p.lengths();
        let plan: Vec<(usize, usize)> = (0..10)
            .map(|i| (0, lengths.get(i + 1).map_or(0, |&l| l.min(1))))
            .collect();
        let q = perturb_superblocks(&p, &plan, OverlapPolicy::NeighborsOnly).unwrap();
        assert_eq!(q.modification(), 9);
        check_perturbation(&q).unwrap();
        let via_plan = PerturbationPlan::Extend { left: 0, right: 1 }.apply(&p).unwrap();
        assert_eq!(via_plan, q);
    }

    #[test]
    fn extension_past_neighbour_fails() {
        let p = parse_fixed(30, 10).unwrap();
        let plan = [(0, 11), (0, 0), (0, 0)];
        assert!(matches!(
            perturb_superblocks(&p, &plan, OverlapPolicy::NeighborsOnly),
            Err(Error::OverlapViolation { block: 0 })
        ));
        let q = perturb_superblocks(&p, &plan, OverlapPolicy::Unconstrained).unwrap();
        assert!(matches!(check_perturbation(&q), Err(Error::OverlapViolation { block: 0 })));
        assert!(perturb_superblocks(&p, &[(0, 21), (0, 0), (0, 0)], OverlapPolicy::Unconstrained).is_err());
    }

    #[test]
    fn half_trim_is_extensive() {
        let p = parse_growing(10_000, GrowthSchedule::Sqrt).unwrap();
        let q = PerturbationPlan::TrimFraction { fraction: 0.5 }.apply(&p).unwrap();
        assert_eq!(q.modification(), 5_000);
    }
}
