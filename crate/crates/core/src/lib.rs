//! Blockwise information sums for stationary finite-alphabet sources.
//!
//! For a stationary source `P` and a parsing `x_1^N = w_1 .. w_c` of a
//! sampled prefix, the crate evaluates `(1/N) sum_i -ln P([w_i])` exactly and
//! compares it with `-(1/N) ln P([x_1^N])` and with oracle entropy rates.
//! It also exposes the Breiman martingale `Z_n = P([x_2^n]) / P([x_1^n])`
//! together with enumeration-based checks of its identities.
//!
//! All logarithms are natural; every entropy is in nats.

pub mod error;
pub mod estimator;
pub mod martingale;
pub mod measures;
pub mod numeric;
pub mod parsing;
pub mod verify;

pub use error::{Error, Result};
