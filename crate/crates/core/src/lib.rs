//! Prime constellation counting, singular-series constants and deviation
//! statistics under generalized Cramér urn models.

pub mod batemanhorn;
pub mod cli;
pub mod cramer;
pub mod error;
pub mod euler;
pub mod logint;
mod numeric;
pub mod primes;
pub mod report;
pub mod stats;
pub mod tuples;

pub use error::{Error, Result};
pub use numeric::NeumaierSum;
