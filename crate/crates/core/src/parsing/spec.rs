use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::generators::floor_sqrt;
use super::{
    parse_adversarial, parse_counterexample_u, parse_counterexample_v, parse_counterexample_w,
    parse_fixed, parse_growing, parse_lz78, parse_random_sublinear, GrowthSchedule, Parsing,
};
use crate::error::{Error, Result};
use crate::measures::{derive_seed, ProcessModel, Symbol};

/// Block budget `c_N` as a function of `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// `floor(sqrt N)`.
    Sqrt,
    Fixed(usize),
    /// `max(1, floor(fraction * N))`; linear, not sublinear.
    Fraction(f64),
}

impl Budget {
    pub fn blocks(self, n: usize) -> usize {
        let c = match self {
            Budget::Sqrt => floor_sqrt(n),
            Budget::Fixed(c) => c,
            Budget::Fraction(f) => (f * n as f64) as usize,
        };
        c.clamp(1, n.max(1))
    }

    fn label(self) -> String {
        match self {
            Budget::Sqrt => "sqrt".into(),
            Budget::Fixed(c) => c.to_string(),
            Budget::Fraction(f) => format!("{f}N"),
        }
    }
}

/// A named parsing procedure with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParserSpec {
    Fixed { k: usize },
    Growing { schedule: GrowthSchedule },
    Lz78 {},
    RandomSublinear { budget: Budget },
    Adversarial { budget: Budget },
    CounterexampleU { k: usize },
    CounterexampleV { k: usize, epsilon: f64 },
    CounterexampleW { k: usize, epsilon: f64 },
    /// With probability `1 / ln N` (independently per `N`) blocks of length
    /// `k`, otherwise `ceil(sqrt N)`. `c_N / N -> 0` in probability but not
    /// almost surely.
    Intermittent { k: usize },
}

/// What a parser may look at.
#[derive(Debug, Clone, Copy)]
pub struct ParseInput<'a> {
    pub model: &'a ProcessModel,
    pub symbols: &'a [Symbol],
    pub seed: u64,
    /// Entropy-rate reference for the data-dependent counterexample parsers.
    pub h_ref: f64,
}

impl ParserSpec {
    pub fn validate(&self) -> Result<()> {
        let even = |k: usize| {
            if k == 0 || !k.is_multiple_of(2) {
                Err(Error::InvalidParameter(format!("K must be even and positive, got {k}")))
            } else {
                Ok(())
            }
        };
        let eps = |e: f64| {
            if e > 0.0 && e < 0.25 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1/4), got {e}")))
            }
        };
        match *self {
            ParserSpec::Fixed { k } | ParserSpec::Intermittent { k } if k == 0 => {
                Err(Error::InvalidParameter("K must be >= 1".into()))
            }
            ParserSpec::CounterexampleU { k } => even(k),
            ParserSpec::CounterexampleV { k, epsilon } | ParserSpec::CounterexampleW { k, epsilon } => {
                even(k)?;
                eps(epsilon)
            }
            ParserSpec::RandomSublinear { budget: Budget::Fraction(f) }
            | ParserSpec::Adversarial { budget: Budget::Fraction(f) }
                if !(f > 0.0 && f <= 1.0) =>
            {
                Err(Error::InvalidParameter(format!("budget fraction must lie in (0, 1], got {f}")))
            }
            _ => Ok(()),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ParserSpec::Fixed { .. } => "fixed",
            ParserSpec::Growing { .. } => "growing",
            ParserSpec::Lz78 {} => "lz78",
            ParserSpec::RandomSublinear { .. } => "random_sublinear",
            ParserSpec::Adversarial { .. } => "adversarial",
            ParserSpec::CounterexampleU { .. } => "counterexample_u",
            ParserSpec::CounterexampleV { .. } => "counterexample_v",
            ParserSpec::CounterexampleW { .. } => "counterexample_w",
            ParserSpec::Intermittent { .. } => "intermittent",
        }
    }

    /// `key=value` pairs joined by `;`.
    pub fn params(&self) -> String {
        match self {
            ParserSpec::Fixed { k } | ParserSpec::CounterexampleU { k } | ParserSpec::Intermittent { k } => {
                format!("k={k}")
            }
            ParserSpec::Growing { schedule } => format!("schedule={}", schedule.name()),
            ParserSpec::Lz78 {} => String::new(),
            ParserSpec::RandomSublinear { budget } | ParserSpec::Adversarial { budget } => {
                format!("budget={}", budget.label())
            }
            ParserSpec::CounterexampleV { k, epsilon } | ParserSpec::CounterexampleW { k, epsilon } => {
                format!("k={k};epsilon={epsilon}")
            }
        }
    }

    pub fn label(&self) -> String {
        let params = self.params();
        if params.is_empty() {
            self.family().to_owned()
        } else {
            format!("{}[{params}]", self.family())
        }
    }

    /// Whether `c_N / N -> 0` almost surely for this family.
    pub fn is_sublinear(&self) -> bool {
        match self {
            ParserSpec::Growing { .. } | ParserSpec::Lz78 {} => true,
            ParserSpec::RandomSublinear { budget } | ParserSpec::Adversarial { budget } => {
                !matches!(budget, Budget::Fraction(_))
            }
            _ => false,
        }
    }

    pub fn needs_h_ref(&self) -> bool {
        matches!(self, ParserSpec::CounterexampleV { .. } | ParserSpec::CounterexampleW { .. })
    }

    /// Parses the first `n` symbols. Randomized families draw their
    /// boundaries from `derive_seed(input.seed, n)`.
    pub fn parse(&self, input: &ParseInput<'_>, n: usize) -> Result<Parsing> {
        self.validate()?;
        if n > input.symbols.len() {
            return Err(Error::InsufficientLength {
                required: n,
                available: input.symbols.len(),
            });
        }
        let seed = derive_seed(input.seed, n as u64);
        match *self {
            ParserSpec::Fixed { k } => parse_fixed(n, k),
            ParserSpec::Growing { schedule } => parse_growing(n, schedule),
            ParserSpec::Lz78 {} => parse_lz78(input.symbols, n),
            ParserSpec::RandomSublinear { budget } => parse_random_sublinear(n, budget.blocks(n), seed),
            ParserSpec::Adversarial { budget } => parse_adversarial(input.model, input.symbols, n, budget.blocks(n)),
            ParserSpec::CounterexampleU { k } => parse_counterexample_u(n, k),
            ParserSpec::CounterexampleV { k, epsilon } => {
                parse_counterexample_v(input.model, input.symbols, n, k, input.h_ref, epsilon)
            }
            ParserSpec::CounterexampleW { k, epsilon } => {
                parse_counterexample_w(input.model, input.symbols, n, k, input.h_ref, epsilon)
            }
            ParserSpec::Intermittent { k } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let p_linear = 1.0 / (n.max(3) as f64).ln();
                if rng.gen::<f64>() < p_linear {
                    parse_fixed(n, k.min(n))
                } else {
                    parse_growing(n.max(2), GrowthSchedule::Sqrt)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SublinearityPoint {
    pub n: usize,
    pub blocks: usize,
    pub density: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SublinearitySeries {
    pub points: Vec<SublinearityPoint>,
    /// `c_N / N` strictly decreases over the second half of the grid.
    pub decreasing_tail: bool,
    pub final_density: f64,
}

/// `c_N / N` along `n_grid` on nested prefixes of one trajectory.
pub fn sublinearity_series(spec: &ParserSpec, input: &ParseInput<'_>, n_grid: &[usize]) -> Result<SublinearitySeries> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("N grid must be non-empty and strictly increasing".into()));
    }
    let points = n_grid
        .iter()
        .map(|&n| {
            let p = spec.parse(input, n)?;
            Ok(SublinearityPoint {
                n,
                blocks: p.block_count(),
                density: p.density(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tail = &points[points.len() / 2..];
    let decreasing_tail = tail.windows(2).all(|w| w[1].density < w[0].density);
    let final_density = points.last().expect("non-empty").density;
    Ok(SublinearitySeries {
        points,
        decreasing_tail,
        final_density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{reference, sample_trajectory};
    use crate::parsing::validate_parsing;

    fn all_specs() -> Vec<ParserSpec> {
        vec![
            ParserSpec::Fixed { k: 4 },
            ParserSpec::Growing { schedule: GrowthSchedule::Sqrt },
            ParserSpec::Growing { schedule: GrowthSchedule::Log2 },
            ParserSpec::Lz78 {},
            ParserSpec::RandomSublinear { budget: Budget::Sqrt },
            ParserSpec::Adversarial { budget: Budget::Sqrt },
            ParserSpec::CounterexampleU { k: 4 },
            ParserSpec::CounterexampleV { k: 4, epsilon: 0.05 },
            ParserSpec::CounterexampleW { k: 4, epsilon: 0.05 },
            ParserSpec::Intermittent { k: 4 },
        ]
    }

    #[test]
    fn every_family_yields_valid_deterministic_parsings() {
        for model in [reference::m1(), reference::h1(), reference::mixture_m1_uniform()] {
            for seed in [1u64, 2] {
                let t = sample_trajectory(&model, 3001, seed).unwrap();
                let input = ParseInput {
                    model: &model,
                    symbols: t.symbols(),
                    seed,
                    h_ref: 0.54,
                };
                for spec in all_specs() {
                    for n in [64usize, 999, 3000, 3001] {
                        let p = spec.parse(&input, n).unwrap();
                        assert!(validate_parsing(p.boundaries(), n).pass(), "{}", spec.label());
                        assert_eq!(p.to_text(), spec.parse(&input, n).unwrap().to_text());
                    }
                }
            }
        }
    }

    #[test]
    fn spec_json_forms() {
        let s: ParserSpec = serde_json::from_str(r#"{"family": "growing", "schedule": "sqrt"}"#).unwrap();
        assert_eq!(s, ParserSpec::Growing { schedule: GrowthSchedule::Sqrt });
        let s: ParserSpec = serde_json::from_str(r#"{"family": "adversarial", "budget": "sqrt"}"#).unwrap();
        assert_eq!(s, ParserSpec::Adversarial { budget: Budget::Sqrt });
        let s: ParserSpec = serde_json::from_str(r#"{"family": "random_sublinear", "budget": {"fixed": 31}}"#).unwrap();
        assert_eq!(s, ParserSpec::RandomSublinear { budget: Budget::Fixed(31) });
        assert!(serde_json::from_str::<ParserSpec>(r#"{"family": "lz78", "k": 3}"#).is_err());
        assert!(ParserSpec::CounterexampleV { k: 3, epsilon: 0.05 }.validate().is_err());
        assert_eq!(ParserSpec::CounterexampleW { k: 4, epsilon: 0.05 }.label(), "counterexample_w[k=4;epsilon=0.05]");
    }

    #[test]
    fn density_series() {
        let model = reference::iid_uniform_binary();
        let t = sample_trajectory(&model, 1_000_000, 11).unwrap();
        let input = ParseInput {
            model: &model,
            symbols: t.symbols(),
            seed: 11,
            h_ref: 2f64.ln(),
        };
        let grid = [1_000, 10_000, 100_000, 1_000_000];
        let fixed = sublinearity_series(&ParserSpec::Fixed { k: 4 }, &input, &grid).unwrap();
        assert_eq!(fixed.final_density, 0.25);
        let sqrt = sublinearity_series(&ParserSpec::Growing { schedule: GrowthSchedule::Sqrt }, &input, &grid).unwrap();
        for p in &sqrt.points {
            let scaled = p.density * (p.n as f64).sqrt();
            assert!((scaled - 1.0).abs() < 0.05, "{p:?}");
        }
        let lz = sublinearity_series(&ParserSpec::Lz78 {}, &input, &grid).unwrap();
        assert!(lz.decreasing_tail);
        assert!(lz.final_density < 0.08);
        assert!(sublinearity_series(&ParserSpec::Lz78 {}, &input, &[10, 10]).is_err());
    }
}
