//! Metrics, cross-validation folds, paired t-tests and the evaluation report.

mod exchange;
mod folds;
mod metrics;
mod report;
mod ttest;

pub use exchange::{read_predictions, write_predictions, PredictionRow};
pub use folds::{make_folds, FoldPlan, FoldStrategy};
pub use metrics::{auc, log_score};
pub use report::{evaluate, mean_se, Comparison, EvalOptions, EvalReport, ModelPredictions, ModelScores, ScoredRecord};
pub use ttest::{paired_t_test, TTest};
