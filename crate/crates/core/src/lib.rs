//! Sequential von Neumann measurements on finite-dimensional quantum systems.

pub mod classical;
pub mod error;
pub mod meter;
pub mod paths;
pub mod quantum;
pub mod sampling;
pub mod scenarios;

pub use error::{Error, Result};
