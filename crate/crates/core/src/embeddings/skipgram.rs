//! Skip-gram word vectors trained with negative sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::text_pipeline::PAD;

/// Exponent applied to unigram counts to form the noise distribution.
pub const NOISE_EXPONENT: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    /// Context words on each side of the center word.
    pub window: usize,
    pub dim: usize,
    pub negatives_per_positive: usize,
    /// Frequency threshold `t` of the drop probability `1 - sqrt(t / f)`.
    pub subsample_threshold: f64,
    pub epochs: usize,
    /// Initial SGD step, decayed linearly over training.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            window: 5,
            dim: 300,
            negatives_per_positive: 5,
            subsample_threshold: 1e-3,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
        }
    }
}

impl SkipGramConfig {
    fn validate(&self) -> Result<()> {
        if self.window < 1 || self.dim < 1 || self.negatives_per_positive < 1 {
            return Err(Error::Config(
                "skip-gram window, dim and negatives_per_positive must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Trained vectors and the mean negative-sampling loss of each epoch.
#[derive(Debug, Clone)]
pub struct SkipGramOutput {
    pub embedding: EmbeddingMatrix,
    pub epoch_losses: Vec<f64>,
}

/// All (center, context) pairs at distance `1..=window`.
pub fn positive_pairs(seq: &[u32], window: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for (i, &center) in seq.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(seq.len() - 1);
        for (j, &ctx) in seq.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                out.push((center, ctx));
            }
        }
    }
    out
}

/// Probability of discarding an occurrence of a word with relative frequency `freq`.
pub fn drop_probability(freq: f64, threshold: f64) -> f64 {
    if freq <= 0.0 || threshold <= 0.0 {
        return 0.0;
    }
    (1.0 - (threshold / freq).sqrt()).clamp(0.0, 1.0)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

struct NoiseTable {
    cdf: Vec<f64>,
}

impl NoiseTable {
    fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(NOISE_EXPONENT);
                acc
            })
            .collect();
        for c in cdf.iter_mut() {
            *c /= acc;
        }
        NoiseTable { cdf }
    }

    fn sample(&self, rng: &mut impl Rng) -> u32 {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1) as u32
    }
}

/// Trains skip-gram vectors over `corpus` (sequences of vocabulary ids).
/// Single-threaded and deterministic for a fixed seed.
pub fn train_skipgram(corpus: &[Vec<u32>], vocab_size: usize, cfg: &SkipGramConfig) -> Result<SkipGramOutput> {
    cfg.validate()?;
    if vocab_size < cfg.negatives_per_positive + 1 {
        return Err(Error::Config(format!(
            "vocabulary of {vocab_size} tokens is too small for {} negatives per positive",
            cfg.negatives_per_positive
        )));
    }
    let mut counts = vec![0u64; vocab_size];
    for seq in corpus {
        for &id in seq {
            if id as usize >= vocab_size {
                return Err(Error::Data(format!("token id {id} outside vocabulary of {vocab_size}")));
            }
            if id != PAD {
                counts[id as usize] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::Data("skip-gram corpus is empty".into()));
    }

    let dim = cfg.dim;
    let mut init_rng = stream_rng(cfg.seed, "skipgram-init");
    let mut input = EmbeddingMatrix::random(vocab_size, dim, &mut init_rng);
    let mut output = vec![0.0; vocab_size * dim];
    let noise = NoiseTable::new(&counts);
    let drop: Vec<f64> = counts
        .iter()
        .map(|&c| drop_probability(c as f64 / total as f64, cfg.subsample_threshold))
        .collect();

    let mut rng = stream_rng(cfg.seed, "skipgram-train");
    let planned = (cfg.epochs as u64 * total).max(1) as f64;
    let mut processed = 0u64;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut grad_in = vec![0.0; dim];
    let mut kept = Vec::new();

    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0u64;
        for seq in corpus {
            kept.clear();
            for &id in seq {
                if id == PAD {
                    continue;
                }
                processed += 1;
                if rng.gen::<f64>() >= drop[id as usize] {
                    kept.push(id);
                }
            }
            let lr = cfg.learning_rate * (1.0 - processed as f64 / planned).max(1e-4);
            if kept.len() < 2 {
                continue;
            }
            for (center, ctx) in positive_pairs(&kept, cfg.window) {
                grad_in.iter_mut().for_each(|g| *g = 0.0);
                let c_row = center as usize * dim;
                for n in 0..=cfg.negatives_per_positive {
                    let (target, label) = if n == 0 {
                        (ctx, 1.0)
                    } else {
                        let t = noise.sample(&mut rng);
                        if t == ctx {
                            continue;
                        }
                        (t, 0.0)
                    };
                    let t_row = target as usize * dim;
                    let score: f64 = (0..dim)
                        .map(|j| input.weights[c_row + j] * output[t_row + j])
                        .sum();
                    loss_sum -= if label > 0.5 { log_sigmoid(score) } else { log_sigmoid(-score) };
                    let g = lr * (label - sigmoid(score));
                    for j in 0..dim {
                        grad_in[j] += g * output[t_row + j];
                        output[t_row + j] += g * input.weights[c_row + j];
                    }
                }
                for j in 0..dim {
                    input.weights[c_row + j] += grad_in[j];
                }
                pairs += 1;
            }
        }
        epoch_losses.push(if pairs > 0 { loss_sum / pairs as f64 } else { 0.0 });
    }
    input.row_mut(PAD).iter_mut().for_each(|w| *w = 0.0);
    Ok(SkipGramOutput { embedding: input, epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_one_on_alternating_sequence() {
        let seq: Vec<u32> = (0..10).map(|i| if i % 2 == 0 { 5 } else { 6 }).collect();
        let mut pairs = positive_pairs(&seq, 1);
        pairs.sort_unstable();
        pairs.dedup();
        assert_eq!(pairs, vec![(5, 6), (6, 5)]);
    }

    #[test]
    fn drop_probability_formula() {
        assert_eq!(drop_probability(1e-4, 1e-3), 0.0);
        assert!((drop_probability(0.1, 1e-3) - 0.9).abs() < 1e-12);
        assert_eq!(drop_probability(0.5, 0.0), 0.0);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let cfg = SkipGramConfig { dim: 8, epochs: 0, seed: 3, ..Default::default() };
        let corpus = vec![vec![5u32, 6, 7, 8, 9, 10, 5, 6]];
        let out = train_skipgram(&corpus, 11, &cfg).unwrap();
        let init = EmbeddingMatrix::random(11, 8, &mut stream_rng(3, "skipgram-init"));
        assert_eq!(out.embedding, init);
        assert!(out.epoch_losses.is_empty());
    }

    #[test]
    fn vocabulary_too_small() {
        let cfg = SkipGramConfig { negatives_per_positive: 5, ..Default::default() };
        assert!(matches!(train_skipgram(&[vec![1, 2]], 5, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn deterministic() {
        let cfg = SkipGramConfig { dim: 6, epochs: 2, seed: 9, ..Default::default() };
        let corpus: Vec<Vec<u32>> = (0..20).map(|i| (0..15).map(|j| 5 + (i * j) % 7).collect()).collect();
        let a = train_skipgram(&corpus, 12, &cfg).unwrap();
        let b = train_skipgram(&corpus, 12, &cfg).unwrap();
        assert_eq!(a.embedding, b.embedding);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }
}
