//! Benchmark laboratory for structure learning of binary pairwise Markov
//! networks: ground-truth model generation, sRBM block-Gibbs sampling, six
//! edge-scoring methods, and precision-recall evaluation.

pub mod error;
pub mod eval;
pub mod model;
pub mod pairwise;
pub mod plm;
pub mod sampler;
pub mod stream;

pub use error::{CoreError, Result};
