//! Stein's-method normal-approximation bounds for functionals of independent
//! inputs.
//!
//! - [`stein`]: Stein equation solver, Kolmogorov distance, Stein discrepancy.
//! - [`perturbative`]: randomized discrete derivatives, the statistic `T`, and
//!   the resulting Kolmogorov-distance bounds for arbitrary functionals.
//! - [`couplings`]: exchangeable pairs, dependency graphs, size-biased
//!   couplings and the Lindeberg replacement telescope.
//! - [`mst`]: minimal spanning trees on lattice boxes with random weights.

pub mod couplings;
pub mod error;
pub mod exec;
pub mod mst;
pub mod normal;
pub mod perturbative;
pub mod quadrature;
pub mod seeding;
pub mod stats;
pub mod stein;

pub use error::{Error, Result};
pub use exec::Parallelism;
pub use seeding::SeedSequence;
pub use stats::Estimate;
