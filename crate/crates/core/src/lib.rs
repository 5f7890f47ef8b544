//! Capacity-approaching interactive coding over simulated noisy channels.
//!
//! The crate simulates two parties running a noiseless alternating protocol
//! through a coding scheme that interleaves hash-based verification,
//! computation and backtracking, over a round-exact channel controlled by
//! random, oblivious or fully adaptive budget-limited adversaries.
//!
//! * [`protocol`]: input protocols, transcripts, confirmation padding.
//! * [`channel`]: round resolution, adversaries, budgets, trace format.
//! * [`smallbias`]: δ-biased stretching over GF(2^m).
//! * [`hashing`]: inner product hash and the short-seed hash family.
//! * [`randex`]: robust randomness exchange and shared randomness.
//! * [`schemes`]: the large-alphabet, oblivious and fully adversarial schemes.
//! * [`analysis`]: potential function and collision accounting on logged runs.
//! * [`harness`]: sweeps, stress tables, CSV output.

pub mod analysis;
pub mod bits;
pub mod channel;
mod error;
pub mod harness;
pub mod hashing;
pub mod protocol;
pub mod randex;
pub mod schemes;
pub mod smallbias;

pub use error::{Error, Result};
