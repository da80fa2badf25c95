//! Evolutionary discovery of interpretable dynamical-systems models from
//! multivariate time series.
//!
//! The crate evolves systems of difference equations (one expression tree per
//! observed state variable) with genetic programming. Candidate model
//! structures are scored per patient: a small NSGA-II run fits the shared
//! parameter vector against per-target forecast errors, and the resulting
//! Pareto fronts feed a four-criterion fitness (descriptive accuracy,
//! predictive accuracy, parameter sensitivity, complexity).
//!
//! Modules:
//! - [`model`]: expression trees, genotypes, state schemas, text/JSON formats
//! - [`sim`]: deterministic simulation and rolling-origin forecast errors
//! - [`moo`]: NSGA-II, non-dominated sorting, crowding, exact hypervolume
//! - [`fitness`]: per-patient parameter fitting and the four fitness scores
//! - [`gp`]: the outer genetic-programming loop over model structures
//! - [`data`]: schemas, long-format CSV ingestion, preprocessing, synthesis
//! - [`eval`]: test-segment RMSE tables, baselines, rank-sum comparisons
//! - [`cli`]: the `evodyn` command-line front end

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod fitness;
pub mod gp;
pub mod model;
pub mod moo;
pub mod seed;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
