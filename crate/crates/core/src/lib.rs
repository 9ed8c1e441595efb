//! Dirichlet Sampling bandit algorithms and the numerical tools around them.

// Negated float comparisons are used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dirichlet;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod kinf;
pub mod policies;
pub mod presets;
pub mod seed;

pub use error::{Error, Result};
