//! Post-selection confidence intervals for high-dimensional regression with
//! dependent errors.
//!
//! The pipeline selects variables with the orthogonal greedy algorithm,
//! estimates the selected coefficients after projecting out estimated common
//! factors, and calibrates intervals by hybrid resampling of block-bootstrapped
//! disturbances. Baseline t, normal and truncated-normal intervals are provided
//! for comparison, together with a Monte-Carlo harness.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod dgp;
pub mod error;
pub mod factor;
pub mod harness;
pub mod inference;
pub mod io;
pub mod iv;
pub mod linalg;
pub mod oga;
pub mod pipeline;
pub mod resample;
pub mod rng;

pub use error::{Error, Result};
