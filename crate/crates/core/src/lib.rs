//! Similarity statistics for categorical datasets and a simulation harness
//! for measuring how well each statistic separates similar from dissimilar
//! dataset pairs.

pub mod data;
pub mod distances;
pub mod error;
pub mod outcome;
pub mod simgraph;
pub(crate) mod blossom;
pub mod crossmatch;
pub mod cmdist;
pub mod classifier;
pub mod seeds;
pub mod otdd;
pub mod simgen;
pub mod method;
pub mod runner;
pub mod pesr;
pub mod oracles;

pub use error::{Error, Result};
