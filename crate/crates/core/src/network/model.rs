//! Forward pass, exact reverse-mode gradients and inference for the full
//! network.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::attention::{attention_backward, attention_forward, AttentionOutput};
use super::conv::{conv_backward, conv_forward, ConvCache};
use super::head::{head_backward, head_forward, HeadCache};
use super::loss::{bce_with_logit, sigmoid};
use super::lstm::{lstm_backward, lstm_forward, LstmCache};
use super::params::NetworkParams;
use crate::error::{Error, Result};
use crate::text_pipeline::{BlockSequence, PAD};

/// One encoded firm-year: optional block sequence, encoded numerical
/// features and the 0/1 label.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub blocks: Option<BlockSequence>,
    pub features: Vec<f64>,
    pub label: f64,
}

impl Example {
    /// Number of blocks, 0 without text.
    pub fn steps(&self) -> usize {
        self.blocks.as_ref().map_or(0, |b| b.len())
    }
}

/// Samples per gradient chunk. Chunks are summed in a fixed order so the
/// batch gradient does not depend on the thread count.
pub const GRAD_CHUNK: usize = 8;

struct TextTrace {
    embedded: Vec<Vec<f64>>,
    conv: Vec<Option<ConvCache>>,
    lstm: LstmCache,
    hs: Vec<Vec<f64>>,
    attention: AttentionOutput,
}

struct Trace {
    text: Option<TextTrace>,
    head: HeadCache,
}

/// Gradient of a group of samples: dense over everything but the embedding,
/// sparse over embedding rows.
struct ChunkGrad {
    dense: Vec<f64>,
    rows: BTreeMap<u32, Vec<f64>>,
    loss: f64,
}

/// Per-block attention of one document.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockAttention {
    pub block: usize,
    /// Token positions covered by the block, clipped to the document.
    pub token_range: std::ops::Range<usize>,
    pub ids: Vec<u32>,
    pub alpha: f64,
}

fn signature(trace: &Trace) -> Vec<u32> {
    let mut sig: Vec<u32> = Vec::new();
    if let Some(t) = &trace.text {
        for c in t.conv.iter().flatten() {
            sig.extend_from_slice(&c.argmax);
        }
    }
    sig.extend(trace.head.pre1.iter().map(|&x| u32::from(x > 0.0)));
    sig.extend(trace.head.pre2.iter().map(|&x| u32::from(x > 0.0)));
    sig
}

impl NetworkParams {
    fn step_mask(&self, ex: &Example, steps: usize) -> Result<Vec<bool>> {
        let blocks = ex.blocks.as_ref().ok_or_else(|| Error::Data("text model given an example without text".into()))?;
        if blocks.block_size() != self.config().block_size {
            return Err(Error::Shape(format!(
                "example blocks have size {}, network expects {}",
                blocks.block_size(),
                self.config().block_size
            )));
        }
        let mut mask = blocks.mask().to_vec();
        mask.resize(steps.max(blocks.len()), false);
        Ok(mask)
    }

    fn forward_trace(&self, ex: &Example, steps: usize) -> Result<Trace> {
        let cfg = self.config();
        let text = if cfg.text_mode.has_text() {
            let mask = self.step_mask(ex, steps)?;
            let blocks = ex.blocks.as_ref().expect("checked by step_mask");
            let conv = self.conv_layer();
            let v = cfg.embedding_dim;
            let mut embedded = Vec::with_capacity(mask.len());
            let mut caches = Vec::with_capacity(mask.len());
            let mut zs = Vec::with_capacity(mask.len());
            for (t, &active) in mask.iter().enumerate() {
                if !active {
                    embedded.push(Vec::new());
                    caches.push(None);
                    zs.push(Vec::new());
                    continue;
                }
                let mut b = Vec::with_capacity(cfg.block_size * v);
                for &id in blocks.block(t) {
                    if id as usize >= self.meta.vocab_size {
                        return Err(Error::Data(format!(
                            "token id {id} outside vocabulary of size {}",
                            self.meta.vocab_size
                        )));
                    }
                    b.extend_from_slice(self.embedding_row(id));
                }
                let (z, cache) = conv_forward(&b, &conv)?;
                embedded.push(b);
                caches.push(Some(cache));
                zs.push(z);
            }
            let inputs: Vec<&[f64]> = zs.iter().map(Vec::as_slice).collect();
            let (hs, lstm) = lstm_forward(&inputs, &mask, &self.lstm_cell());
            let attention = attention_forward(&hs, &mask, &self.attention_head())?;
            Some(TextTrace { embedded, conv: caches, lstm, hs, attention })
        } else {
            None
        };
        let mut input = Vec::with_capacity(self.head_shape().input);
        if let Some(t) = &text {
            input.extend_from_slice(&t.attention.h_final);
        }
        input.extend_from_slice(&ex.features);
        let (_, head) = head_forward(&input, &self.dense_head())?;
        Ok(Trace { text, head })
    }

    /// Pre-sigmoid output for one example.
    pub fn logit(&self, ex: &Example) -> Result<f64> {
        Ok(self.forward_trace(ex, 0)?.head.logit)
    }

    /// Predicted distress probability for one example.
    pub fn forward(&self, ex: &Example) -> Result<f64> {
        self.logit(ex).map(sigmoid)
    }

    /// Predictions for many examples; data-parallel, order preserving.
    pub fn predict(&self, examples: &[Example]) -> Result<Vec<f64>> {
        examples.par_iter().map(|ex| self.forward(ex)).collect()
    }

    /// Checks that examples were encoded with the training vocabulary.
    pub fn check_vocab(&self, vocab_hash: &str) -> Result<()> {
        if self.config().text_mode.has_text() && vocab_hash != self.meta.vocab_hash {
            return Err(Error::Config(format!(
                "vocabulary mismatch: model was trained with {}, input uses {vocab_hash}",
                self.meta.vocab_hash
            )));
        }
        Ok(())
    }

    /// Attention weight per block, zero on masked blocks.
    pub fn attention(&self, ex: &Example) -> Result<Vec<f64>> {
        if !self.config().text_mode.has_text() {
            return Err(Error::Config("attention requested from a model without text".into()));
        }
        Ok(self.forward_trace(ex, 0)?.text.expect("text model").attention.alphas)
    }

    /// Token ids and attention weight of every active block.
    pub fn extract_attention(&self, ex: &Example) -> Result<Vec<BlockAttention>> {
        let alphas = self.attention(ex)?;
        let blocks = ex.blocks.as_ref().expect("text model");
        Ok((0..blocks.len())
            .filter(|&t| blocks.is_active(t))
            .map(|t| {
                let range = blocks.token_range(t);
                BlockAttention {
                    block: t,
                    ids: blocks.block(t)[..range.len()].to_vec(),
                    token_range: range,
                    alpha: alphas[t],
                }
            })
            .collect())
    }

    /// Discrete state of every non-smooth operation: ReLU on/off patterns and
    /// max-pool argmax positions. Finite differences are only meaningful
    /// while this stays fixed.
    pub fn activation_signature(&self, ex: &Example) -> Result<Vec<u32>> {
        Ok(signature(&self.forward_trace(ex, 0)?))
    }

    /// Logit and activation signature of `ex` padded to `steps` blocks, from
    /// a single forward pass.
    pub(crate) fn logit_and_signature(&self, ex: &Example, steps: usize) -> Result<(f64, Vec<u32>)> {
        let trace = self.forward_trace(ex, steps)?;
        Ok((trace.head.logit, signature(&trace)))
    }

    fn chunk_gradient(&self, batch: &[&Example], steps: usize) -> Result<ChunkGrad> {
        let emb_len = self.layout.embedding.len();
        let mut g = ChunkGrad { dense: vec![0.0; self.values.len() - emb_len], rows: BTreeMap::new(), loss: 0.0 };
        let off = |r: &std::ops::Range<usize>| (r.start - emb_len)..(r.end - emb_len);
        let (conv_r, lstm_r, attn_r, head_r) =
            (off(&self.layout.conv), off(&self.layout.lstm), off(&self.layout.attention), off(&self.layout.head));
        let v = self.config().embedding_dim;
        // Each sample is differentiated into a fresh buffer and then added,
        // so the batch gradient is an exact sum of per-sample gradients.
        let mut sample = vec![0.0; g.dense.len()];
        let mut sample_rows: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for ex in batch {
            sample.iter_mut().for_each(|x| *x = 0.0);
            sample_rows.clear();
            let trace = self.forward_trace(ex, steps)?;
            let logit = trace.head.logit;
            g.loss += bce_with_logit(logit, ex.label);
            let dlogit = sigmoid(logit) - ex.label;
            let dinput = head_backward(dlogit, &self.dense_head(), &trace.head, &mut sample[head_r.clone()]);
            if let Some(text) = trace.text {
                let d = self.config().cell_size;
                let dhs = attention_backward(
                    &dinput[..d],
                    &text.hs,
                    &text.attention,
                    &self.attention_head(),
                    &mut sample[attn_r.clone()],
                );
                let dzs = lstm_backward(&dhs, &text.lstm, &self.lstm_cell(), &mut sample[lstm_r.clone()]);
                let blocks = ex.blocks.as_ref().expect("text model");
                let conv = self.conv_layer();
                let fine_tune = self.config().fine_tune_embeddings;
                let mut dblock = vec![0.0; self.config().block_size * v];
                for (t, cache) in text.conv.iter().enumerate() {
                    let Some(cache) = cache else { continue };
                    dblock.iter_mut().for_each(|x| *x = 0.0);
                    conv_backward(
                        &dzs[t],
                        &text.embedded[t],
                        &conv,
                        cache,
                        &mut sample[conv_r.clone()],
                        fine_tune.then_some(&mut dblock[..]),
                    );
                    if !fine_tune {
                        continue;
                    }
                    for (pos, &id) in blocks.block(t).iter().enumerate() {
                        if id == PAD {
                            continue;
                        }
                        let row = sample_rows.entry(id).or_insert_with(|| vec![0.0; v]);
                        for (r, x) in row.iter_mut().zip(&dblock[pos * v..(pos + 1) * v]) {
                            *r += x;
                        }
                    }
                }
            }
            for (a, x) in g.dense.iter_mut().zip(&sample) {
                *a += x;
            }
            for (id, row) in &sample_rows {
                let acc = g.rows.entry(*id).or_insert_with(|| vec![0.0; v]);
                for (a, x) in acc.iter_mut().zip(row) {
                    *a += x;
                }
            }
        }
        Ok(g)
    }

    /// Mean BCE over `batch` and its gradient written into `grads` (flat
    /// layout, overwritten). Every example is padded to the longest sequence
    /// in the batch. The PAD embedding row and frozen embeddings get zero
    /// gradient.
    pub fn batch_gradient(&self, batch: &[&Example], grads: &mut [f64]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Data("empty batch".into()));
        }
        assert_eq!(grads.len(), self.values.len(), "gradient buffer length");
        let steps = batch.iter().map(|e| e.steps()).max().unwrap_or(0);
        let chunks: Vec<ChunkGrad> = batch
            .par_chunks(GRAD_CHUNK)
            .map(|c| self.chunk_gradient(c, steps))
            .collect::<Result<_>>()?;
        grads.iter_mut().for_each(|x| *x = 0.0);
        let emb_len = self.layout.embedding.len();
        let v = self.config().embedding_dim;
        let mut loss = 0.0;
        for c in &chunks {
            loss += c.loss;
            for (g, x) in grads[emb_len..].iter_mut().zip(&c.dense) {
                *g += x;
            }
            for (&id, row) in &c.rows {
                let start = self.layout.embedding.start + id as usize * v;
                for (g, x) in grads[start..start + v].iter_mut().zip(row) {
                    *g += x;
                }
            }
        }
        let scale = 1.0 / batch.len() as f64;
        grads.iter_mut().for_each(|g| *g *= scale);
        Ok(loss * scale)
    }

    /// Mean BCE without gradients.
    pub fn mean_loss(&self, examples: &[Example]) -> Result<f64> {
        if examples.is_empty() {
            return Ok(0.0);
        }
        let losses: Vec<f64> = examples
            .par_iter()
            .map(|ex| self.logit(ex).map(|s| bce_with_logit(s, ex.label)))
            .collect::<Result<_>>()?;
        Ok(losses.iter().sum::<f64>() / examples.len() as f64)
    }
}
