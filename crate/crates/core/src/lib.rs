//! Distress prediction from annual-report text and financial variables.
//!
//! The crate covers the whole path from raw filings to evaluated models:
//!
//! - [`data_model`]: the firm-year schema, feature winsorization and
//!   encoding, and a synthetic corpus generator.
//! - [`text_pipeline`]: normalization, Porter stemming, scrubbing,
//!   vocabulary construction and half-overlapping word blocks.
//! - [`embeddings`]: skip-gram word vectors with negative sampling.
//! - [`network`]: the convolutional-recurrent attention network with
//!   hand-written gradients, Adam, early stopping and checkpoints.
//! - [`baselines`]: penalized logistic regression.
//! - [`evaluation`]: AUC, log score, grouped folds and paired t-tests.
//! - [`reporting`]: attention heatmaps and run reports.

pub mod baselines;
pub mod data_model;
pub mod embeddings;
pub mod error;
pub mod evaluation;
pub mod network;
pub mod reporting;
pub mod rng;
pub mod text_pipeline;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/running.md")]
    mod running {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
    #[doc = include_str!("../../../book/src/text.md")]
    mod text {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
}
