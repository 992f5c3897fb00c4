use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::convergence::check_grid;
use crate::error::{Error, Result};
use crate::martingale::z_trace;
use crate::measures::{derive_seed, sample_trajectory, ProcessModel};
use crate::parsing::floor_sqrt;

/// Martingale depth used for the observables.
pub const DEFAULT_DEPTH: usize = 8;

/// Bounded observables built from depth-`d` martingale traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `ln max_{n <= d} Z_n`.
    LogZmaxToDepth,
    /// `|ln Z_d|`.
    AbsLogZ,
}

/// The `floor(sqrt N)` indices summed at prefix length `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexFamily {
    /// `0 .. floor(sqrt N)`.
    PrefixSqrt,
    /// A uniform subset of `0 .. N` drawn from `derive_seed(seed, N)`.
    RandomSqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BirkhoffPoint {
    pub n: usize,
    pub indices: usize,
    /// `(1/N) sum_{k in A_N} g(T^k x)`.
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BirkhoffSeries {
    pub observable: Observable,
    pub family: IndexFamily,
    pub depth: usize,
    pub points: Vec<BirkhoffPoint>,
}

impl BirkhoffSeries {
    pub fn final_value(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.value)
    }

    /// `value(N_i) / value(N_{i+1})` for consecutive grid points.
    pub fn decay_factors(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[0].value / w[1].value).collect()
    }
}

/// Sums a bounded observable over `floor(sqrt N)` shifts of one trajectory
/// and normalizes by `N`; the result tends to zero for sublinear index sets.
pub fn sublinear_birkhoff_check(
    model: &ProcessModel,
    g: Observable,
    family: IndexFamily,
    n_grid: &[usize],
    seed: u64,
    depth: usize,
) -> Result<BirkhoffSeries> {
    check_grid(n_grid)?;
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be >= 1".into()));
    }
    let n_max = *n_grid.last().expect("non-empty grid");
    let traj = sample_trajectory(model, n_max + depth, seed)?;
    let observe = |k: usize| -> Result<f64> {
        let trace = z_trace(model, &traj, depth, k)?;
        Ok(match g {
            Observable::LogZmaxToDepth => trace.log_max().expect("depth >= 1"),
            Observable::AbsLogZ => trace.deepest().expect("depth >= 1").abs(),
        })
    };
    let points = n_grid
        .iter()
        .map(|&n| {
            let count = floor_sqrt(n);
            let indices: Vec<usize> = match family {
                IndexFamily::PrefixSqrt => (0..count).collect(),
                IndexFamily::RandomSqrt => {
                    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, n as u64));
                    let mut v = rand::seq::index::sample(&mut rng, n, count).into_vec();
                    v.sort_unstable();
                    v
                }
            };
            let sum = indices.iter().map(|&k| observe(k)).sum::<Result<f64>>()?;
            Ok(BirkhoffPoint {
                n,
                indices: count,
                value: sum / n as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BirkhoffSeries {
        observable: g,
        family,
        depth,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::reference;

    #[test]
    fn uniform_observable_is_ln2() {
        let m = reference::iid_uniform_binary();
        for g in [Observable::LogZmaxToDepth, Observable::AbsLogZ] {
            let s = sublinear_birkhoff_check(&m, g, IndexFamily::PrefixSqrt, &[10_000, 1_000_000], 3, DEFAULT_DEPTH).unwrap();
            assert!((s.final_value() - 2f64.ln() * 1e-3).abs() < 1e-15);
            assert!((s.final_value() - 0.000693).abs() < 5e-7);
        }
    }

    #[test]
    fn m1_random_indices_bounded() {
        let m1 = reference::m1();
        let s = sublinear_birkhoff_check(&m1, Observable::AbsLogZ, IndexFamily::RandomSqrt, &[1_000_000], 4, DEFAULT_DEPTH)
            .unwrap();
        assert!(s.final_value() > 0.0);
        assert!(s.final_value() <= 5f64.ln() * 1e-3 + 1e-15);
    }
}
