//! Exact-rational LP rounding for the priority matroid median problem.
//!
//! Pick an independent set of facilities (in a matroid over the facilities)
//! minimizing opening plus demand-weighted connection cost, where each client
//! must be served within its own radius. The pipeline solves the LP
//! relaxation exactly, filters clients into well-separated centers, rounds to
//! a half-integral point of an auxiliary polytope, and finally to an integral
//! point of a matroid intersection polytope. Every inequality the analysis
//! relies on is recorded in a [`model::Ledger`] with exact values.

pub mod error;
pub mod filter;
pub mod generate;
pub mod io;
pub mod lp;
pub mod matroid;
pub mod model;
pub mod oracle;
pub mod pipeline;
pub mod rat;
pub mod stage_three;
pub mod stage_two;

pub use error::{PmmError, Result};
pub use rat::Rat;
