//! Fair and efficient multi-resource allocation under uncertain per-user
//! requirements.
//!
//! The objective combines a β-indexed fairness factor over dominant-share
//! proportions with a λ-indexed efficiency factor. The distributionally
//! robust model maximizes the worst-case expectation of that objective over
//! a moment ambiguity set on a sampled support, subject to chance
//! constraints on capacity; it is solved by a cutting-surface scheme
//! ([`cutting::solve_sadr`]). Expected-value, robust, sample-average and
//! deterministic models are in [`baselines`]; property checks, sweeps and
//! statistical bounds are in [`analysis`].

// Negated comparisons reject NaN on purpose; solver entry points take the full
// parameter list; index loops mirror the (resource, user) notation.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments,
    clippy::needless_range_loop
)]

pub mod ambiguity;
pub mod analysis;
pub mod baselines;
pub mod cutting;
pub mod error;
pub mod fairness;
pub mod inner;
pub mod master;
pub mod model;
mod nlp;
pub mod par;
pub mod presets;
pub mod scenarios;

pub use error::{Error, Result};
pub use model::{
    Allocation, DiscreteDistribution, FairnessParams, LambdaMode, Matrix, ModelKind,
    ResourceInstance, ScenarioSet, SolveReport,
};
