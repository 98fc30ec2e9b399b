//! Two-cell multi-antenna over-the-air computation with simultaneous signal
//! and interference alignment (SIA).
//!
//! With `M` antennas at every node, each access point recovers `floor(M/2)`
//! interference-free sums of its own devices' symbols, whatever the number of
//! devices per cell. The crate provides the matrix construction, a Monte Carlo
//! link simulator with two baselines, closed-form efficiency comparisons, and
//! the `aircomp` command-line front end.

pub mod baselines;
pub mod cli;
pub mod engine;
pub mod error;
pub mod functional;
pub mod linalg;
pub mod sia;
pub mod system;

pub use error::{Error, Result};
