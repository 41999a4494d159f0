//! t-entropy for transfer operators on finite dynamical systems.
//!
//! A transfer operator for a self-map `alpha` of a finite phase space
//! `X = {0..N-1}` is a positive linear operator `A` on functions satisfying
//! the homological identity `A((f∘alpha)·g) = f·Ag`. On a finite space this
//! pins the matrix of `A` to the graph of `alpha`, so every transfer operator
//! is a pair `(alpha, w)` with `(Ag)(x) = Σ_{alpha(y)=x} w(y)·g(y)`.
//!
//! The crate computes, for such operators:
//!
//! * the log spectral radius `λ(φ)` of the tilted family `A_φ f = A(e^φ f)`,
//!   both exactly (maximum cycle mean of `φ + ln w` over the functional
//!   graph) and analytically (matrix squaring with rescaling), two
//!   independent engines that are cross-checked;
//! * the t-entropy `τ(μ)` of a probability measure, in its original form
//!   (a two-level infimum over time `n` and partitions of unity, with an
//!   inner supremum over measures) and in the simplified form valid for
//!   invariant measures, where the supremum is replaced by the substitution
//!   `m = μ`;
//! * the variational principle `λ(φ) = max_μ (μ(φ) + τ(μ))` over the
//!   invariant-measure polytope, the equivalence of the two t-entropy
//!   definitions on invariant measures, and the Legendre-dual recovery
//!   `τ(μ) = inf_φ (λ(φ) − μ(φ))`.
//!
//! Conventions: `ln 0 = −∞` with an explicit extended-real representation
//! ([`ExtendedReal`]); a summand `μ(g)·ln(μ(Aⁿg)/μ(g))` is 0 when `μ(g) = 0`
//! and `−∞` when `μ(g) > 0` and `μ(Aⁿg) = 0`. All randomized searches take
//! explicit seeds and are deterministic.
//!
//! The `tentropy` binary exposes the checks over a small JSON system format;
//! see the crate README.

#![forbid(unsafe_code)]

use thiserror::Error;

pub mod cli;
pub mod dynamics;
pub mod entropy;
pub mod partition;
pub mod transfer;
pub mod varprinciple;
pub mod xreal;

pub use dynamics::{mix, sample_simplex, Cycle, FiniteSystem, Measure};
pub use entropy::{
    simplex_log_maximize, tau, tau_cycle_closed_form, tau_invariant_mixture, tau_n_sup,
    tau_prime_n, PartitionId, SimplexSolveReport, TEntropyResult, TauOptions,
};
pub use partition::{oscillation_refinement, pullback_join, PartitionOfUnity};
pub use transfer::{Potential, SpectralMethod, SpectralResult, TransferOperator};
pub use varprinciple::{
    check_definition_equivalence, check_variational_principle, legendre_dual_tau, EquivOptions,
    EquivReport, LegendreOptions, LegendreReport, VpOptions, VpReport,
};
pub use xreal::ExtendedReal;

/// Errors for system construction, validation and ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha[{position}] = {value} is out of range for a system of size {size}")]
    OutOfRange {
        position: usize,
        value: i64,
        size: usize,
    },

    #[error("weight[{index}] = {value} is negative")]
    NegativeWeight { index: usize, value: f64 },

    #[error("matrix entry [{row}][{col}] = {value} is negative beyond tolerance")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("matrix entry [{row}][{col}] = {value} lies off the graph of alpha (alpha({col}) != {row})")]
    SupportViolation { row: usize, col: usize, value: f64 },

    #[error("mass[{index}] = {value} must be strictly positive")]
    NonPositiveMass { index: usize, value: f64 },

    #[error("not a probability vector: {reason}")]
    NotAMeasure { reason: String },

    #[error("bad mixture coefficients: {reason}")]
    BadCoefficients { reason: String },

    #[error("not a cycle of the system: {reason}")]
    NotACycle { reason: String },

    #[error("not a partition of unity: pointwise sum at point {point} is {sum}")]
    NotAPartition { point: usize, sum: f64 },

    #[error("measure is not invariant (pushforward residual {residual})")]
    NotInvariant { residual: f64 },

    #[error("potential[{index}] = {value} is not finite")]
    NonFinitePotential { index: usize, value: f64 },

    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
