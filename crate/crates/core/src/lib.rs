//! Parallel-in-time reduced basis generation for parabolic problems.
//!
//! Important time points are picked from data matrices (DEIM or leverage-score
//! sampling), short local implicit Euler simulations are started from Gaussian random
//! initial data at those points, and the pooled trailing snapshots are compressed into
//! an orthonormal spatial basis. The [`rom`] module measures how well the resulting
//! Galerkin reduced model tracks the full-order solution.

pub mod basisgen;
pub mod discretization;
pub mod error;
pub mod linalg;
pub mod rng;
pub mod rom;
pub mod selection;
pub mod timestepping;

pub use error::{Error, Result};
