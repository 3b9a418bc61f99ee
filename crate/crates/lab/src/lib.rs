//! Experiment runner for `typeprior-core`: configuration files, type pool
//! files, the parallel suite runner, paired significance statistics and
//! report generation. The `typeprior` binary wraps these in a CLI.

pub mod config;
pub mod pool;
pub mod report;
pub mod stats;
pub mod suite;
