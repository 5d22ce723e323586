use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::attention::AttentionHead;
use super::config::NetworkConfig;
use super::conv::{ConvLayer, ConvShape};
use super::head::{DenseHead, HeadShape};
use super::lstm::{LstmCell, LstmShape};
use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::text_pipeline::PAD;

/// Named slice of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamBlock {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    pub shape: Vec<usize>,
}

impl ParamBlock {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Layout of every trainable parameter in one flat vector. Component ranges
/// are contiguous so each component sees a single slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub blocks: Vec<ParamBlock>,
    pub embedding: Range<usize>,
    pub conv: Range<usize>,
    pub lstm: Range<usize>,
    pub attention: Range<usize>,
    pub head: Range<usize>,
}

impl ParamLayout {
    pub fn new(cfg: &NetworkConfig, vocab_size: usize, n_features: usize) -> Self {
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut push = |name: &str, shape: Vec<usize>| {
            let len = shape.iter().product();
            blocks.push(ParamBlock { name: name.to_string(), offset, len, shape });
            offset += len;
            offset
        };
        let text = cfg.text_mode.has_text();
        let (v, d) = (cfg.embedding_dim, cfg.cell_size);
        let conv = cfg.conv_shape();
        let lstm = LstmShape { cell: d, input: conv.output_len() };
        let head = head_shape(cfg, n_features);

        let start = 0;
        let mut end = start;
        if text {
            end = push("embedding", vec![vocab_size, v]);
        }
        let embedding = start..end;
        let start = end;
        if text {
            end = push("conv.filters", vec![conv.filters, conv.width, v]);
        }
        let conv_r = start..end;
        let start = end;
        if text {
            for g in ["f", "i", "u", "o"] {
                push(&format!("lstm.w_{g}"), vec![d, lstm.concat_len()]);
            }
            for g in ["f", "i", "u", "o"] {
                end = push(&format!("lstm.b_{g}"), vec![d]);
            }
        }
        let lstm_r = start..end;
        let start = end;
        if text {
            push("attention.w", vec![d]);
            end = push("attention.b", vec![1]);
        }
        let attention = start..end;
        let start = end;
        push("dense1.w", vec![head.hidden1, head.input]);
        push("dense1.b", vec![head.hidden1]);
        push("dense2.w", vec![head.hidden2, head.hidden1]);
        push("dense2.b", vec![head.hidden2]);
        push("output.w", vec![1, head.hidden2]);
        end = push("output.b", vec![1]);
        let head_r = start..end;
        ParamLayout { blocks, embedding, conv: conv_r, lstm: lstm_r, attention, head: head_r }
    }

    pub fn total_len(&self) -> usize {
        self.head.end
    }

    pub fn block(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Name of the block containing flat index `i`.
    pub fn block_of(&self, i: usize) -> &str {
        self.blocks
            .iter()
            .find(|b| b.range().contains(&i))
            .map(|b| b.name.as_str())
            .unwrap_or("?")
    }
}

pub fn head_shape(cfg: &NetworkConfig, n_features: usize) -> HeadShape {
    let text = if cfg.text_mode.has_text() { cfg.cell_size } else { 0 };
    HeadShape { input: text + n_features, hidden1: cfg.hidden1, hidden2: cfg.hidden2 }
}

/// Metadata stored beside the parameters in a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMeta {
    pub config: NetworkConfig,
    pub vocab_size: usize,
    pub n_features: usize,
    /// Content hash of the vocabulary the model was trained with.
    pub vocab_hash: String,
}

/// All network parameters in one flat vector plus the metadata needed to
/// interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub meta: ModelMeta,
    pub layout: ParamLayout,
    pub values: Vec<f64>,
}

fn glorot(rng: &mut impl Rng, out: &mut [f64], fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for w in out {
        *w = rng.gen_range(-limit..limit);
    }
}

impl NetworkParams {
    /// Fan-scaled uniform weights, zero biases except the forget gate, and a
    /// small random embedding with a zero PAD row.
    pub fn init(meta: ModelMeta, rng: &mut impl Rng) -> Result<Self> {
        let cfg = &meta.config;
        cfg.validate()?;
        if cfg.text_mode.has_text() && meta.vocab_size <= PAD as usize {
            return Err(Error::Config("vocabulary is empty".into()));
        }
        let layout = ParamLayout::new(cfg, meta.vocab_size, meta.n_features);
        let mut values = vec![0.0; layout.total_len()];
        let (v, d) = (cfg.embedding_dim, cfg.cell_size);
        for b in &layout.blocks {
            let out = &mut values[b.range()];
            match b.name.as_str() {
                "embedding" => {
                    let e = EmbeddingMatrix::random(meta.vocab_size, v, rng);
                    out.copy_from_slice(&e.weights);
                }
                "conv.filters" => glorot(rng, out, cfg.filter_width * v, cfg.filter_width * cfg.filters),
                n if n.starts_with("lstm.w_") => glorot(rng, out, b.shape[1], d),
                "lstm.b_f" => out.iter_mut().for_each(|x| *x = cfg.forget_bias),
                "attention.w" => glorot(rng, out, d, 1),
                "dense1.w" | "dense2.w" | "output.w" => glorot(rng, out, b.shape[1], b.shape[0]),
                _ => {}
            }
        }
        Ok(Self { meta, layout, values })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.meta.config
    }

    pub fn conv_layer(&self) -> ConvLayer<'_> {
        ConvLayer { shape: self.conv_shape(), weights: &self.values[self.layout.conv.clone()] }
    }

    pub fn conv_shape(&self) -> ConvShape {
        self.meta.config.conv_shape()
    }

    pub fn lstm_shape(&self) -> LstmShape {
        LstmShape { cell: self.meta.config.cell_size, input: self.conv_shape().output_len() }
    }

    pub fn lstm_cell(&self) -> LstmCell<'_> {
        LstmCell { shape: self.lstm_shape(), params: &self.values[self.layout.lstm.clone()] }
    }

    pub fn attention_head(&self) -> AttentionHead<'_> {
        AttentionHead { dim: self.meta.config.cell_size, params: &self.values[self.layout.attention.clone()] }
    }

    pub fn head_shape(&self) -> HeadShape {
        head_shape(&self.meta.config, self.meta.n_features)
    }

    pub fn dense_head(&self) -> DenseHead<'_> {
        DenseHead { shape: self.head_shape(), params: &self.values[self.layout.head.clone()] }
    }

    pub fn embedding_row(&self, id: u32) -> &[f64] {
        let v = self.meta.config.embedding_dim;
        let start = self.layout.embedding.start + id as usize * v;
        &self.values[start..start + v]
    }

    /// Copies the rows of a (pretrained) embedding into the parameters.
    pub fn set_embedding(&mut self, emb: &EmbeddingMatrix) -> Result<()> {
        let expected = (self.meta.vocab_size, self.meta.config.embedding_dim);
        if (emb.vocab_size, emb.dim) != expected {
            return Err(Error::Shape(format!(
                "embedding is {}x{}, network expects {}x{}",
                emb.vocab_size, emb.dim, expected.0, expected.1
            )));
        }
        self.values[self.layout.embedding.clone()].copy_from_slice(&emb.weights);
        let v = self.meta.config.embedding_dim;
        let pad = self.layout.embedding.start + PAD as usize * v;
        self.values[pad..pad + v].iter_mut().for_each(|x| *x = 0.0);
        Ok(())
    }

    pub fn embedding(&self) -> EmbeddingMatrix {
        EmbeddingMatrix {
            weights: self.values[self.layout.embedding.clone()].to_vec(),
            vocab_size: self.meta.vocab_size,
            dim: self.meta.config.embedding_dim,
            trainable: self.meta.config.fine_tune_embeddings,
        }
    }
}
