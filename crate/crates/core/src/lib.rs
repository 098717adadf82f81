//! Identification capacity of state-dependent discrete memoryless channels with
//! noiseless feedback and simultaneous state sensing.
//!
//! The crate is `no_std` (it needs `alloc`) and covers the algorithmic side:
//!
//! - [`channel`]: state-dependent DMCs, the averaged channel, sampling and likelihoods.
//! - [`estimation`]: the optimal per-letter state estimator and minimal distortion profiles.
//! - [`capacity`]: entropies, Blahut-Arimoto, feedback ID capacities, capacity-distortion
//!   functions, tradeoff curves and image-size bounds.
//! - [`typicality`]: conditional types and the typical set used for common randomness.
//! - [`coding`]: the concatenated feedback ID code (pilot block, coloring functions,
//!   inner transmission code) with encoder and verifier.
//! - [`sim`]: Monte Carlo trials and the exact brute-force oracles that anchor them.
//!
//! All logarithms are base 2 and every rate is in bits per channel use.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod capacity;
pub mod channel;
pub mod coding;
mod error;
pub mod estimation;
pub mod rng;
pub mod sim;
pub mod typicality;

pub use error::{Error, Result};

/// Slack used by every "≤ budget" comparison so analytically tight budgets stay feasible.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// Tolerance for normalization checks on validated input tables.
pub const INPUT_TOLERANCE: f64 = 1e-12;

/// Tolerance for normalization checks on derived quantities (accumulation slack).
pub const DERIVED_TOLERANCE: f64 = 1e-9;

/// Largest exhaustive enumeration any oracle is allowed to perform.
pub const ENUMERATION_LIMIT: u64 = 1 << 20;
