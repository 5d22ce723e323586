//! Additive attention over LSTM states: `s_t = w . h_t + b`, softmax over
//! unmasked steps, `h_final = sum_t alpha_t h_t`.

use crate::error::{Error, Result};

/// Parameter view: `w` (length `dim`) followed by the scalar `b`.
#[derive(Debug, Clone, Copy)]
pub struct AttentionHead<'a> {
    pub dim: usize,
    pub params: &'a [f64],
}

impl AttentionHead<'_> {
    pub fn param_len(dim: usize) -> usize {
        dim + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub h_final: Vec<f64>,
    /// Weights per step; exactly zero on masked steps.
    pub alphas: Vec<f64>,
}

pub fn attention_forward(hs: &[Vec<f64>], mask: &[bool], head: &AttentionHead<'_>) -> Result<AttentionOutput> {
    if hs.len() != mask.len() {
        return Err(Error::Shape(format!("{} states but {} mask entries", hs.len(), mask.len())));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::Shape("attention over a fully masked sequence".into()));
    }
    let d = head.dim;
    let (w, b) = (&head.params[..d], head.params[d]);
    let scores: Vec<f64> = hs
        .iter()
        .zip(mask)
        .map(|(h, &m)| if m { b + w.iter().zip(h).map(|(a, x)| a * x).sum::<f64>() } else { f64::NEG_INFINITY })
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut alphas: Vec<f64> = scores
        .iter()
        .zip(mask)
        .map(|(s, &m)| if m { (s - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = alphas.iter().sum();
    alphas.iter_mut().for_each(|a| *a /= total);
    let mut h_final = vec![0.0; d];
    for (h, &a) in hs.iter().zip(&alphas) {
        if a != 0.0 {
            for (o, x) in h_final.iter_mut().zip(h) {
                *o += a * x;
            }
        }
    }
    Ok(AttentionOutput { h_final, alphas })
}

/// Accumulates `w, b` gradients into `grads` and returns gradients w.r.t.
/// each state.
pub fn attention_backward(
    dh_final: &[f64],
    hs: &[Vec<f64>],
    out: &AttentionOutput,
    head: &AttentionHead<'_>,
    grads: &mut [f64],
) -> Vec<Vec<f64>> {
    let d = head.dim;
    let w = &head.params[..d];
    let dalpha: Vec<f64> = hs.iter().map(|h| h.iter().zip(dh_final).map(|(a, b)| a * b).sum()).collect();
    let mean: f64 = dalpha.iter().zip(&out.alphas).map(|(g, a)| g * a).sum();
    let mut dhs = Vec::with_capacity(hs.len());
    for (t, h) in hs.iter().enumerate() {
        let a = out.alphas[t];
        let ds = a * (dalpha[t] - mean);
        grads[d] += ds;
        for j in 0..d {
            grads[j] += ds * h[j];
        }
        dhs.push((0..d).map(|j| a * dh_final[j] + ds * w[j]).collect());
    }
    dhs
}
