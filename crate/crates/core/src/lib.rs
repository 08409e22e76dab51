pub mod benchmark;
pub mod catboost;
pub mod cli;
pub mod data;
pub mod error;
pub mod gbdt;
pub mod gridsearch;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod preprocess;
pub mod synth;
pub mod task;
pub mod workers;

pub use error::{Error, Result};
