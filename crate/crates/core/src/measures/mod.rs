//! Stationary sources over a finite alphabet and their exact marginals.

mod cursor;
mod entropy;
mod file;
mod model;
pub mod reference;
mod sample;

pub use cursor::{log_cylinder_prob, prefix_log_probs, suffix_log_probs, Cursor, LogProb};
pub(crate) use cursor::log_prob_unchecked;
pub use entropy::{
    beta_sequence, block_entropies, check_cap, default_entropy_rate, discrepancy_gap,
    discrepancy_gap_with, entropy_rate, marginal_entropy, walk_cylinders, DiscrepancyGap,
    EntropyBracket, DEFAULT_RATE_N_CAP, DEFAULT_RATE_TOL, ENUMERATION_CAP,
};
pub use file::{load_model, model_to_json, parse_model, ModelDoc, Variant, MODEL_SCHEMA_VERSION};
pub use model::{
    stationarity_residual, stationary_distribution, Alphabet, HiddenMarkov, Iid, InvariantCheck,
    Markov, Mixture, ProcessModel, Source, StochasticMatrix, Symbol, ValidationReport,
    MAX_ALPHABET,
};
pub use sample::{
    derive_seed, ergodic_component, sample_trajectory, splitmix64, Trajectory, RNG_ALGORITHM,
};

/// Report of [`ProcessModel::validate`].
pub fn validate_model(model: &ProcessModel) -> ValidationReport {
    model.validate()
}
