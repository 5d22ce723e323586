//! Orchestration behind the `textrisk` command: run configuration, the
//! content-addressed stage cache and the cached pipeline.

pub mod cache;
pub mod commands;
pub mod config;
pub mod pipeline;

pub use cache::{Cache, CACHE_ENV};
pub use commands::{exit_code, run, Command, Invocation};
pub use config::{model_name, FoldFlag, Overrides, RunConfig, LOGIT_NAME, RESOLVED_CONFIG};
pub use pipeline::{GridRow, ModelRun, Pipeline};
