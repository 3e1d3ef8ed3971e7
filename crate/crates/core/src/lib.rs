//! Krylov complexity of Hamiltonians and unitaries.
//!
//! The crate builds the benchmark systems (longitudinal-transverse field Ising
//! chain, quantised standard map), computes Lanczos sequences and K-complexity
//! time series, chaos indicators from spectra, and runs random reservoir
//! circuits through a ridge-regression readout.
//!
//! Unitaries are handled through their effective Hamiltonian
//! H_eff = (ħ/T)·log U (principal branch), see [`matrix::log_unitary`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod error;
pub mod krylov;
pub mod matrix;
pub mod qrc;
pub mod random;
pub mod spectral;
pub mod spin;

pub use error::LinalgError;
pub use matrix::{ComplexMatrix, EigenDecomposition, Sign, StateVector, C64};
