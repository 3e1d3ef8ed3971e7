//! Experiment runner: configuration files, the six experiments, CSV output
//! and SVG plots.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;
pub mod stats;
pub mod table;

pub use cli::run_cli;
