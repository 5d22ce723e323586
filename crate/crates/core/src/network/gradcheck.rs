//! Central finite-difference check of the analytic batch gradient.

use std::collections::BTreeMap;

use super::loss::bce_with_logit;
use super::model::Example;
use super::params::NetworkParams;
use crate::error::Result;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlockCheck {
    /// Largest `|analytic - numeric| / max(1, |analytic|)` in the block.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose perturbation crossed a ReLU or max-pool kink.
    pub skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradCheckReport {
    pub blocks: BTreeMap<String, BlockCheck>,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks.values().map(|b| b.max_rel_error).fold(0.0, f64::max)
    }

    pub fn checked(&self) -> usize {
        self.blocks.values().map(|b| b.checked).sum()
    }

    pub fn skipped(&self) -> usize {
        self.blocks.values().map(|b| b.skipped).sum()
    }
}

fn loss_and_signature(params: &NetworkParams, batch: &[&Example], steps: usize) -> Result<(f64, Vec<Vec<u32>>)> {
    let mut loss = 0.0;
    let mut sigs = Vec::with_capacity(batch.len());
    for ex in batch {
        let (logit, sig) = params.logit_and_signature(ex, steps)?;
        loss += bce_with_logit(logit, ex.label);
        sigs.push(sig);
    }
    Ok((loss / batch.len() as f64, sigs))
}

/// Compares every coordinate of the analytic gradient of the mean batch loss
/// against `(L(θ+h) - L(θ-h)) / 2h`. Coordinates whose perturbation changes
/// the activation signature are counted as skipped rather than compared.
/// Frozen coordinates (the PAD embedding row) are compared against zero.
pub fn gradient_check(params: &NetworkParams, batch: &[&Example], h: f64) -> Result<GradCheckReport> {
    let steps = batch.iter().map(|e| e.steps()).max().unwrap_or(0);
    let mut analytic = vec![0.0; params.values.len()];
    params.batch_gradient(batch, &mut analytic)?;
    let (_, base_sig) = loss_and_signature(params, batch, steps)?;
    let frozen = frozen_mask(params);
    let mut probe = params.clone();
    let mut report = GradCheckReport::default();
    for block in &params.layout.blocks {
        let entry = report.blocks.entry(block.name.clone()).or_default();
        for i in block.range() {
            if frozen[i] {
                entry.max_rel_error = entry.max_rel_error.max(analytic[i].abs());
                entry.checked += 1;
                continue;
            }
            let orig = probe.values[i];
            probe.values[i] = orig + h;
            let (plus, sig_plus) = loss_and_signature(&probe, batch, steps)?;
            probe.values[i] = orig - h;
            let (minus, sig_minus) = loss_and_signature(&probe, batch, steps)?;
            probe.values[i] = orig;
            if sig_plus != base_sig || sig_minus != base_sig {
                entry.skipped += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * h);
            let err = (analytic[i] - numeric).abs() / analytic[i].abs().max(1.0);
            entry.max_rel_error = entry.max_rel_error.max(err);
            entry.checked += 1;
        }
    }
    Ok(report)
}

fn frozen_mask(params: &NetworkParams) -> Vec<bool> {
    let mut frozen = vec![false; params.values.len()];
    if params.layout.embedding.is_empty() {
        return frozen;
    }
    let v = params.config().embedding_dim;
    let pad = params.layout.embedding.start + crate::text_pipeline::PAD as usize * v;
    frozen[pad..pad + v].iter_mut().for_each(|f| *f = true);
    if !params.config().fine_tune_embeddings {
        frozen[params.layout.embedding.clone()].iter_mut().for_each(|f| *f = true);
    }
    frozen
}
