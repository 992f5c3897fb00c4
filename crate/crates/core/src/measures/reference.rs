//! The bundled reference sources used by the verification suites.

use super::model::ProcessModel;

/// Binary Markov chain with `p(0->1) = 0.3`, `p(1->0) = 0.2`, `pi = (0.4, 0.6)`.
pub fn m1() -> ProcessModel {
    ProcessModel::markov(vec![vec![0.7, 0.3], vec![0.2, 0.8]], vec![0.4, 0.6])
        .expect("reference model")
        .with_id("M1")
}

/// Binary symmetric hidden-Markov source: hidden flip probability 0.1,
/// emission fidelity 0.9, uniform hidden start.
pub fn h1() -> ProcessModel {
    ProcessModel::hidden_markov(
        vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        vec![0.5, 0.5],
        vec![vec![0.9, 0.1], vec![0.1, 0.9]],
    )
    .expect("reference model")
    .with_id("H1")
}

pub fn iid_uniform_binary() -> ProcessModel {
    ProcessModel::iid(vec![0.5, 0.5])
        .expect("reference model")
        .with_id("IID-uniform")
}

pub fn iid_bernoulli(p_one: f64) -> ProcessModel {
    ProcessModel::iid(vec![1.0 - p_one, p_one])
        .expect("reference model")
        .with_id(format!("IID-bernoulli({p_one})"))
}

/// Equal-weight mixture of [`m1`] and [`iid_uniform_binary`]; stationary but
/// not ergodic.
pub fn mixture_m1_uniform() -> ProcessModel {
    ProcessModel::mixture(0.5, m1(), iid_uniform_binary())
        .expect("reference model")
        .with_id("MIX(M1,IID-uniform)")
}

/// The three ergodic reference sources.
pub fn all() -> Vec<ProcessModel> {
    vec![iid_uniform_binary(), m1(), h1()]
}
