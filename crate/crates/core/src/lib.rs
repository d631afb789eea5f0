//! Multitask Hopfield networks for transductive node classification on sparse
//! weighted graphs.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod folds;
pub mod graph;
pub mod hopfield;
pub mod learning;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod seeds;
pub mod synth;
pub mod tasks;

pub use error::{Error, Result};
