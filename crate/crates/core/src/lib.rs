//! Autoencoder-assisted local outlier factor detection for tabular network
//! traffic.
//!
//! An autoencoder is trained on unlabelled traffic, optionally with gradient
//! reversal on the noisiest batch each epoch. Its bottleneck codes become the
//! reference set for a novelty-mode LOF detector. See [`pipeline`] for the
//! detector variants and [`experiment`] for the file-based workflow.

pub mod autoencoder;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod kde;
pub mod lof;
pub mod pipeline;

pub use error::{Error, Result};
