//! Dense head: two ReLU layers and a sigmoid output unit.
//!
//! Parameter layout: `W1 (h1 x in), b1, W2 (h2 x h1), b2, w3 (h2), b3`.

use super::sigmoid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadShape {
    pub input: usize,
    pub hidden1: usize,
    pub hidden2: usize,
}

impl HeadShape {
    pub fn param_len(&self) -> usize {
        self.hidden1 * self.input + self.hidden1 + self.hidden2 * self.hidden1 + self.hidden2 + self.hidden2 + 1
    }

    /// Offsets of `W1, b1, W2, b2, w3, b3`.
    pub fn offsets(&self) -> [usize; 6] {
        let w1 = 0;
        let b1 = w1 + self.hidden1 * self.input;
        let w2 = b1 + self.hidden1;
        let b2 = w2 + self.hidden2 * self.hidden1;
        let w3 = b2 + self.hidden2;
        let b3 = w3 + self.hidden2;
        [w1, b1, w2, b2, w3, b3]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DenseHead<'a> {
    pub shape: HeadShape,
    pub params: &'a [f64],
}

#[derive(Debug, Clone)]
pub struct HeadCache {
    pub input: Vec<f64>,
    pub pre1: Vec<f64>,
    pub l1: Vec<f64>,
    pub pre2: Vec<f64>,
    pub l2: Vec<f64>,
    pub logit: f64,
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(r, &br)| br + w[r * n..(r + 1) * n].iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

/// Returns the predicted probability and the cache for the backward pass.
pub fn head_forward(input: &[f64], head: &DenseHead<'_>) -> Result<(f64, HeadCache)> {
    let s = head.shape;
    if input.len() != s.input {
        return Err(Error::Shape(format!("head input has {} values, expected {}", input.len(), s.input)));
    }
    let [w1, b1, w2, b2, w3, b3] = s.offsets();
    let p = head.params;
    let pre1 = affine(&p[w1..b1], &p[b1..w2], input);
    let l1: Vec<f64> = pre1.iter().map(|v| v.max(0.0)).collect();
    let pre2 = affine(&p[w2..b2], &p[b2..w3], &l1);
    let l2: Vec<f64> = pre2.iter().map(|v| v.max(0.0)).collect();
    let logit = p[b3] + p[w3..b3].iter().zip(&l2).map(|(a, v)| a * v).sum::<f64>();
    let cache = HeadCache { input: input.to_vec(), pre1, l1, pre2, l2, logit };
    Ok((sigmoid(logit), cache))
}

/// Accumulates parameter gradients for `dL/dlogit` and returns the gradient
/// w.r.t. the head input.
pub fn head_backward(dlogit: f64, head: &DenseHead<'_>, cache: &HeadCache, grads: &mut [f64]) -> Vec<f64> {
    let s = head.shape;
    let [w1, b1, w2, b2, w3, b3] = s.offsets();
    let p = head.params;
    grads[b3] += dlogit;
    let mut dpre2 = vec![0.0; s.hidden2];
    for j in 0..s.hidden2 {
        grads[w3 + j] += dlogit * cache.l2[j];
        if cache.pre2[j] > 0.0 {
            dpre2[j] = dlogit * p[w3 + j];
        }
    }
    let mut dl1 = vec![0.0; s.hidden1];
    for (r, &g) in dpre2.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grads[b2 + r] += g;
        for c in 0..s.hidden1 {
            grads[w2 + r * s.hidden1 + c] += g * cache.l1[c];
            dl1[c] += g * p[w2 + r * s.hidden1 + c];
        }
    }
    let mut dinput = vec![0.0; s.input];
    for r in 0..s.hidden1 {
        if cache.pre1[r] <= 0.0 || dl1[r] == 0.0 {
            continue;
        }
        let g = dl1[r];
        grads[b1 + r] += g;
        for c in 0..s.input {
            grads[w1 + r * s.input + c] += g * cache.input[c];
            dinput[c] += g * p[w1 + r * s.input + c];
        }
    }
    dinput
}
