//! Numerical tolerances used across the crate.
//!
//! All sampled states are unit-norm and all paper quantities are O(1) per
//! normalized state, so these sit at the double-precision noise floor rather
//! than scaling with problem size.

/// Max entrywise deviation of U†U from the identity for generated unitaries.
pub const UNITARITY: f64 = 1e-12;

/// Orthonormality of singular-vector blocks and canonical-form site checks.
pub const ORTHONORMALITY: f64 = 1e-10;

/// Agreement between MPS-contracted and dense-contracted quantities.
pub const DENSE_EQUIV: f64 = 1e-9;

/// Norm of freshly sampled random MPS states (exact by construction).
pub const STATE_NORM: f64 = 1e-10;

/// Below this, the estimator denominator y = ⟨ψ|A²|ψ⟩ is flagged degenerate.
pub const DEGENERATE_Y: f64 = 1e-14;

/// Default singular-value truncation cutoff (relative squared weight).
pub const DEFAULT_CUTOFF: f64 = 1e-12;

/// Dense conversion limit for state vectors (2^N amplitudes).
pub const DENSE_LIMIT_SITES: usize = 14;

/// Dense limit for two-copy moment operators (D² × D² entries).
pub const SECOND_MOMENT_LIMIT_SITES: usize = 7;
