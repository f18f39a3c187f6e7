//! Byzantine-robust distributed SGD with local momentum: a desk-scale
//! simulator, robust aggregators, attacks, a batch-size planner built on the
//! convergence bounds, and an experiment harness.

pub mod aggregators;
pub mod attacks;
pub mod engine;
pub mod error;
pub mod harness;
pub mod planner;
pub mod tasks;
pub mod vecmath;
pub mod verify;

pub use error::{Error, Result};
