//! Exact tools for one-dimensional optimal transport with cost `|x - y|`:
//! stochastic orders, the line decomposition of a pair of measures, Kellerer
//! style multiplicative couplings and the entropic approximation.

pub mod cli;
pub mod couplings;
pub mod decomposition;
pub mod entropic;
pub mod error;
pub mod grid;
pub mod instances;
pub mod measure;
pub mod orders;
pub mod plan;
pub mod scalar;
pub mod svg;

pub use error::{Error, Result};
pub use measure::{Measure, Side};
pub use scalar::{q, Bound, Scalar};
