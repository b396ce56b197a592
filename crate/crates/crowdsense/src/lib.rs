//! Trace-driven simulator and algorithm library for budget-constrained
//! crowd-sensing: given an opportunistic contact trace, pick which n
//! internal devices sense in each interval and measure the resulting
//! coverage against ground truth.

pub mod bootstrap;
pub mod cli;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod model;
pub mod rng;
pub mod select;
pub mod sim;

pub use error::{Error, Result};
