//! Experiment harness for the Markov network structure-learning benchmark:
//! configuration, replicate orchestration, result aggregation.

pub mod aggregate;
pub mod config;
pub mod experiment;
