//! Weighted prime races `Σ_{p<=x} w(p) p^{-σ}` for real Dirichlet characters
//! and bounded multiplicative weights, together with L-function evaluation
//! carrying proven truncation radii.
//!
//! - [`sieve`]: segmented odd-only sieve feeding every other module.
//! - [`characters`]: real characters (period tables, Kronecker symbols) and
//!   general multiplicative weights.
//! - [`races`]: streamed race values, checkpoints and sign-change detection.
//! - [`lfun`]: `L(σ, χ)`, Euler products, the `B(σ)` correction, the
//!   log-decomposition check, bias-bound and conjecture scans, and the
//!   step-function Abel identity check.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characters;
pub mod dd;
pub mod summation;
pub mod lfun;
pub mod races;
pub mod sieve;
