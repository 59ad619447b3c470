//! Heat source and channelized-permeability studies for chronobasis.

pub mod config;
pub mod error;
pub mod manufactured;
pub mod oracle;
pub mod plot;
pub mod problems;
pub mod study;

pub use error::{ExperimentError, Result};
