use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("word is outside the support of the model (zero cylinder probability)")]
    OutOfSupport,

    #[error("enumeration of {atoms} atoms exceeds the cap of {cap}")]
    CapExceeded { atoms: u128, cap: u64 },

    #[error("symbol {symbol} is not in an alphabet of size {alphabet_size}")]
    InvalidSymbol { symbol: u8, alphabet_size: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid parsing: {0}")]
    InvalidParsing(String),

    #[error("trajectory of length {available} is too short, {required} symbols needed")]
    InsufficientLength { required: usize, available: usize },

    #[error("no admissible split point in window for N = {n}")]
    WindowEmpty { n: usize },

    #[error("trim ({left}, {right}) removes all of block {block} of length {length}")]
    TrimTooLarge {
        block: usize,
        left: usize,
        right: usize,
        length: usize,
    },

    #[error("extended block {block} would reach past its neighbouring blocks")]
    OverlapViolation { block: usize },

    #[error("discrepancy gap {gap:.3e} does not exceed resolution {resolution:.3e}")]
    GapTooSmall { gap: f64, resolution: f64 },

    #[error("perturbation modifies {modified} of {n} symbols, which is not subextensive")]
    BudgetNotSubextensive { modified: usize, n: usize },

    #[error("experiment requires an ergodic model, got a mixture")]
    NonErgodic,

    #[error("{path}: {message}")]
    ModelFile { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
