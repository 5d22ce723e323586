//! Classical comparator: L2-penalized logistic regression on the numerical
//! features.

mod logit;

pub use logit::{fit_logit, fit_logit_traced, penalized_log_likelihood, predict_logit, LogitFit, LogitModel, DEFAULT_L2};
