//! Batch runner for impurity-model VQE and spectral-moment experiments.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod verify;
