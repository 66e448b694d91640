//! Bayesian error-bars for belief-network queries.
//!
//! Discrete networks with Dirichlet-distributed CPT rows, exact inference,
//! delta-method variances for query responses, and Monte Carlo checks of the
//! resulting credible intervals.

pub mod dirichlet;
mod error;
pub mod errorbars;
pub mod experiments;
pub mod inference;
pub mod model;
pub mod montecarlo;
pub mod seed;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
