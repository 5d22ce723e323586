/// Probability clamp used wherever a log of a prediction is reported.
pub const PROB_EPS: f64 = 1e-12;

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln σ(s) + (1-y) ln(1-σ(s))]`, evaluated as `softplus(s) - y s`.
pub fn bce_with_logit(logit: f64, y: f64) -> f64 {
    logit.max(0.0) - y * logit + (-logit.abs()).exp().ln_1p()
}

/// Mean binary cross-entropy of probabilities `pd` against labels `y`,
/// with predictions clamped to `[PROB_EPS, 1 - PROB_EPS]`.
pub fn bce_loss(pd: &[f64], y: &[f64]) -> f64 {
    assert_eq!(pd.len(), y.len(), "prediction and label lengths differ");
    if pd.is_empty() {
        return 0.0;
    }
    let total: f64 = pd
        .iter()
        .zip(y)
        .map(|(&p, &t)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum();
    total / pd.len() as f64
}
