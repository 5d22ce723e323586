use crate::error::{Error, Result};
use crate::network::PROB_EPS;

/// Probability that a random positive outscores a random negative, ties
/// counted half, via the Mann-Whitney rank sum with average tie ranks.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("score {i} is NaN")));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1.0).count();
    let n_neg = labels.iter().filter(|&&y| y == 0.0).count();
    if n_pos + n_neg != labels.len() {
        return Err(Error::Data("labels must be 0 or 1".into()));
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data("AUC undefined: only one class present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum keeps average tie ranks integral.
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1, average (i + j + 2) / 2.
        let avg2 = (i + j + 2) as u128;
        let pos = order[i..=j].iter().filter(|&&k| labels[k] == 1.0).count() as u128;
        rank_sum2 += avg2 * pos;
        i = j + 1;
    }
    let (p, q) = (n_pos as u128, n_neg as u128);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * q) as f64)
}

/// Mean negative Bernoulli log-likelihood with predictions clamped to
/// `[1e-12, 1 - 1e-12]`.
pub fn log_score(p_hat: &[f64], labels: &[f64]) -> Result<f64> {
    if p_hat.len() != labels.len() {
        return Err(Error::Shape(format!("{} predictions but {} labels", p_hat.len(), labels.len())));
    }
    if p_hat.is_empty() {
        return Err(Error::Data("log score of an empty set".into()));
    }
    let mut total = 0.0;
    for (&p, &y) in p_hat.iter().zip(labels) {
        if p.is_nan() {
            return Err(Error::NonFinite("prediction is NaN".into()));
        }
        let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
        total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(total / p_hat.len() as f64)
}
