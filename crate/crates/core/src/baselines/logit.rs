use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::sigmoid;

pub const DEFAULT_L2: f64 = 1e-6;
const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;
const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogitModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub l2_penalty: f64,
    pub feature_names: Vec<String>,
}

/// A fitted model with the penalized log-likelihood after every Newton
/// iteration (first entry: the starting point).
#[derive(Debug, Clone, PartialEq)]
pub struct LogitFit {
    pub model: LogitModel,
    pub objective: Vec<f64>,
    pub converged: bool,
}

/// `sum_i [y_i s_i - softplus(s_i)] - l2/2 |β|²`; the intercept is not
/// penalized.
pub fn penalized_log_likelihood(x: &[Vec<f64>], y: &[f64], beta: &[f64], intercept: f64, l2: f64) -> f64 {
    let ll: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &t)| {
            let s = intercept + row.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
            t * s - (s.max(0.0) + (-s.abs()).exp().ln_1p())
        })
        .sum();
    ll - 0.5 * l2 * beta.iter().map(|b| b * b).sum::<f64>()
}

fn validate(x: &[Vec<f64>], y: &[f64], l2: f64) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if x.is_empty() {
        return Err(Error::Data("no training rows".into()));
    }
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::Config(format!("l2 penalty {l2} must be finite and non-negative")));
    }
    let p = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != p {
            return Err(Error::Shape(format!("row {i} has {} features, expected {p}", row.len())));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature matrix row {i}, column {j}")));
        }
    }
    if let Some(i) = y.iter().position(|&t| t != 0.0 && t != 1.0) {
        return Err(Error::Data(format!("label {i} is {}, expected 0 or 1", y[i])));
    }
    Ok(p)
}

pub fn fit_logit(x: &[Vec<f64>], y: &[f64], l2: f64, feature_names: Vec<String>) -> Result<LogitModel> {
    fit_logit_traced(x, y, l2, feature_names).map(|f| f.model)
}

/// Newton-Raphson (IRLS) with step halving, stopping when the gradient norm
/// falls below 1e-8 or after 100 iterations. Single-class labels give zero
/// coefficients and the logit of the smoothed base rate.
pub fn fit_logit_traced(x: &[Vec<f64>], y: &[f64], l2: f64, feature_names: Vec<String>) -> Result<LogitFit> {
    let p = validate(x, y, l2)?;
    if !feature_names.is_empty() && feature_names.len() != p {
        return Err(Error::Shape(format!("{} feature names for {p} features", feature_names.len())));
    }
    let n = x.len();
    let positives: f64 = y.iter().sum();
    if positives == 0.0 || positives == n as f64 {
        let rate = (positives + 0.5) / (n as f64 + 1.0);
        let model = LogitModel {
            coefficients: vec![0.0; p],
            intercept: (rate / (1.0 - rate)).ln(),
            l2_penalty: l2,
            feature_names,
        };
        let obj = penalized_log_likelihood(x, y, &model.coefficients, model.intercept, l2);
        return Ok(LogitFit { model, objective: vec![obj], converged: true });
    }

    // Column 0 is the intercept.
    let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
    let mut theta = DVector::<f64>::zeros(p + 1);
    let rate = positives / n as f64;
    theta[0] = (rate / (1.0 - rate)).ln();
    let objective_at = |t: &DVector<f64>| penalized_log_likelihood(x, y, &t.as_slice()[1..], t[0], l2);
    let mut obj = objective_at(&theta);
    let mut trace = vec![obj];
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let s = &design * &theta;
        let probs = s.map(sigmoid);
        let resid = DVector::from_fn(n, |i, _| y[i] - probs[i]);
        let mut grad = design.tr_mul(&resid);
        for j in 1..=p {
            grad[j] -= l2 * theta[j];
        }
        if grad.norm() < GRAD_TOL {
            converged = true;
            break;
        }
        let weighted = DMatrix::from_fn(n, p + 1, |i, j| design[(i, j)] * probs[i] * (1.0 - probs[i]));
        let mut hess = design.tr_mul(&weighted);
        for j in 1..=p {
            hess[(j, j)] += l2;
        }
        let Some(chol) = hess.cholesky() else {
            return Err(separation_error(x, y, &theta, l2, "singular Hessian"));
        };
        let delta = chol.solve(&grad);
        // Predicted gain of the Newton step. Below the resolution of the
        // objective a line search cannot tell steps apart, so the full step
        // is taken.
        let gain = grad.dot(&delta);
        if gain < ROUNDOFF * (1.0 + obj.abs()) {
            theta += &delta;
            obj = objective_at(&theta);
            trace.push(obj);
            continue;
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = &theta + &delta * step;
            let cand_obj = objective_at(&cand);
            if cand_obj >= obj {
                theta = cand;
                obj = cand_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        trace.push(obj);
        if !accepted {
            return Err(Error::NonFinite("logit line search found no ascent direction".into()));
        }
    }
    // A finite unpenalized maximizer never strictly separates the classes:
    // scaling a separating direction would raise the likelihood further.
    if l2 == 0.0 && (!converged || strictly_separated(x, y, &theta)) {
        return Err(separation_error(x, y, &theta, l2, "coefficients diverge"));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logit coefficients".into()));
    }
    let model = LogitModel {
        coefficients: theta.as_slice()[1..].to_vec(),
        intercept: theta[0],
        l2_penalty: l2,
        feature_names,
    };
    Ok(LogitFit { model, objective: trace, converged })
}

fn score_gap(x: &[Vec<f64>], y: &[f64], theta: &DVector<f64>) -> (f64, f64) {
    let scores: Vec<f64> = x
        .iter()
        .map(|r| theta[0] + r.iter().zip(theta.iter().skip(1)).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let min_pos = scores.iter().zip(y).filter(|(_, &t)| t == 1.0).map(|(s, _)| *s).fold(f64::INFINITY, f64::min);
    let max_neg = scores.iter().zip(y).filter(|(_, &t)| t == 0.0).map(|(s, _)| *s).fold(f64::NEG_INFINITY, f64::max);
    (min_pos, max_neg)
}

fn strictly_separated(x: &[Vec<f64>], y: &[f64], theta: &DVector<f64>) -> bool {
    let (min_pos, max_neg) = score_gap(x, y, theta);
    min_pos > max_neg
}

fn separation_error(x: &[Vec<f64>], y: &[f64], theta: &DVector<f64>, l2: f64, what: &str) -> Error {
    let (min_pos, max_neg) = score_gap(x, y, theta);
    if l2 == 0.0 && min_pos >= max_neg {
        Error::Data(format!("labels are perfectly separated ({what}); refit with an l2 penalty > 0"))
    } else {
        Error::Data(format!("logit fit failed ({what}); an l2 penalty > 0 may help"))
    }
}

/// `σ(β_0 + x·β)` for every row.
pub fn predict_logit(model: &LogitModel, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    x.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != model.coefficients.len() {
                return Err(Error::Shape(format!(
                    "row {i} has {} features, model expects {}",
                    row.len(),
                    model.coefficients.len()
                )));
            }
            Ok(sigmoid(model.intercept + row.iter().zip(&model.coefficients).map(|(a, b)| a * b).sum::<f64>()))
        })
        .collect()
}

impl LogitModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path.display().to_string(), e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}
