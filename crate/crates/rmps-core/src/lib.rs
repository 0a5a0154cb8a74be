//! Random matrix product states for pure-state thermodynamics.
//!
//! This crate implements a Monte Carlo scheme that samples normalized random
//! MPS (each site tensor a sub-block of an independent Haar unitary), filters
//! the samples toward microcanonical or canonical ensembles, and estimates
//! finite-temperature expectation values and operator traces through the ratio
//! statistic z = ⟨ψ|ABA|ψ⟩ / ⟨ψ|A²|ψ⟩ with (ε, δ) accuracy planning.
//!
//! The crate is `no_std` (with `alloc`): everything here is pure computation
//! over owned buffers, driven by explicitly passed random streams. File
//! formats, config handling, the CLI, and the multithreaded sample driver live
//! in the companion `rmps-thermo` crate.
//!
//! Module map:
//!
//! - [`linalg`]: dense complex kernels — Haar unitaries, QR, truncated SVD,
//!   Hermitian eigendecomposition, operator norms.
//! - [`mps`]: matrix product states and operators — inner products, MPO
//!   expectation values, compression, canonical forms, dense conversion.
//! - [`sampler`]: the normalized random-MPS ensemble and per-index streams.
//! - [`hamiltonian`]: spin-chain MPOs, the energy filter G = I − (H−E)²/r²,
//!   and imaginary-time Trotter steps.
//! - [`estimator`]: the Monte Carlo engine — sample plans, thermal
//!   expectation values, trace estimation, variance diagnostics.
//! - [`moments`]: exact first/second moment operators of the ensemble and
//!   their distance to the Haar moments (2-design checks).
//! - [`dense`]: small-system dense oracles used for verification.
//! - [`container`]: versioned byte-level serialization of states/operators.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod container;
pub mod dense;
pub mod estimator;
pub mod hamiltonian;
pub mod linalg;
pub mod moments;
pub mod mps;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod tol;

mod math;

use alloc::string::String;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub use num_complex::Complex64 as C64;
