//! Thompson sampling laboratory for finite-action bandits.
//!
//! The crate has two halves. The first is a small simulator: a finite
//! [`ParameterGrid`](model::ParameterGrid) of candidate reward tables, exact and
//! conjugate posteriors ([`belief`]), and Thompson-sampling style policies
//! ([`policies`]). The second is a verification layer ([`diagnostics`]) that
//! enumerates every history of a small instance exactly, checks the tower
//! identity of the optimal-action posterior, and estimates Bayesian regret by
//! seeded replication.
//!
//! The [`observer`] module is the external-observer estimator: it sees only the
//! actions an agent played and reads off the empirical visit frequencies. Under
//! Thompson sampling with sublinear Bayesian regret those frequencies converge
//! almost surely to the indicator of the optimal action.
//!
//! Actions and parameters are zero-based in the Rust API. Every file format and
//! the command-line tool use one-based indices (`a_1` is action `1`).

pub mod belief;
pub mod diagnostics;
mod error;
pub mod harness;
pub mod model;
pub mod observer;
pub mod policies;
pub mod rng;
pub mod trace;

pub use error::{Error, Result};

/// Zero-based action index.
pub type Action = usize;

/// Zero-based parameter (row) index into a [`model::ParameterGrid`].
pub type ParamIndex = usize;
