use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::model::{ProcessModel, Source, StochasticMatrix, Symbol};
use crate::error::{Error, Result};

/// Generator behind every trajectory, recorded in run manifests.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64 (rand_chacha 0.3); \
categorical draws via rand 0.8 WeightedIndex; per-index seeds by splitmix64(master + (index + 1) * 0x9E3779B97F4A7C15)";

/// A sampled prefix `x_1^N`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trajectory {
    symbols: Vec<Symbol>,
    seed: u64,
    model_id: String,
    /// Mixture component drawn for this trajectory.
    component: Option<usize>,
}

impl Trajectory {
    /// Wraps user-supplied symbols, checking them against the model's alphabet.
    pub fn from_symbols(model: &ProcessModel, symbols: Vec<Symbol>) -> Result<Self> {
        model.alphabet().check_word(&symbols)?;
        Ok(Self {
            symbols,
            seed: 0,
            model_id: model.id().to_owned(),
            component: None,
        })
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn component(&self) -> Option<usize> {
        self.component
    }

    /// First `n` symbols, or `InsufficientLength`.
    pub fn prefix(&self, n: usize) -> Result<&[Symbol]> {
        self.symbols.get(..n).ok_or(Error::InsufficientLength {
            required: n,
            available: self.symbols.len(),
        })
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th trajectory under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

pub fn sample_trajectory(model: &ProcessModel, n: usize, seed: u64) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::InvalidParameter("trajectory length must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut symbols = Vec::with_capacity(n);
    let component = match model.source() {
        Source::Mixture(m) => {
            let c = usize::from(rng.gen::<f64>() >= m.weight);
            fill(&m.components[c], n, &mut rng, &mut symbols)?;
            Some(c)
        }
        _ => {
            fill(model, n, &mut rng, &mut symbols)?;
            None
        }
    };
    Ok(Trajectory {
        symbols,
        seed,
        model_id: model.id().to_owned(),
        component,
    })
}

fn categorical(p: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p).map_err(|e| Error::InvalidModel(format!("cannot sample from {p:?}: {e}")))
}

fn rows(m: &StochasticMatrix) -> Result<Vec<WeightedIndex<f64>>> {
    (0..m.rows()).map(|r| categorical(m.row(r))).collect()
}

fn fill(model: &ProcessModel, n: usize, rng: &mut ChaCha8Rng, out: &mut Vec<Symbol>) -> Result<()> {
    match model.source() {
        Source::Iid(m) => {
            let d = categorical(&m.p)?;
            out.extend((0..n).map(|_| d.sample(rng) as Symbol));
        }
        Source::Markov(m) => {
            let start = categorical(&m.initial)?;
            let steps = rows(&m.transition)?;
            let mut x = start.sample(rng);
            out.push(x as Symbol);
            for _ in 1..n {
                x = steps[x].sample(rng);
                out.push(x as Symbol);
            }
        }
        Source::HiddenMarkov(h) => {
            let start = categorical(&h.initial)?;
            let steps = rows(&h.transition)?;
            let emit = rows(&h.emission)?;
            let mut s = start.sample(rng);
            for k in 0..n {
                if k > 0 {
                    s = steps[s].sample(rng);
                }
                out.push(emit[s].sample(rng) as Symbol);
            }
        }
        Source::Mixture(m) => {
            let c = usize::from(rng.gen::<f64>() >= m.weight);
            fill(&m.components[c], n, rng, out)?;
        }
    }
    Ok(())
}

/// The ergodic component that generated `traj`: the model itself unless it
/// is a mixture, in which case the recorded component.
pub fn ergodic_component<'m>(model: &'m ProcessModel, traj: &Trajectory) -> &'m ProcessModel {
    match (model.source(), traj.component()) {
        (Source::Mixture(m), Some(c)) => &m.components[c],
        _ => model,
    }
}
