//! Dynamic step decomposition for sampling-based inference search.

pub mod backends;
pub mod baselines;
pub mod cli;
pub mod engine;
pub mod harness;
pub mod error;
pub mod policy;
pub mod problem;
pub mod record;
pub mod search;
pub mod seq;
pub mod stats;
pub use error::{DiscError, Result};
