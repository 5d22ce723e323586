//! Word vectors: skip-gram pretraining, text-format I/O and the embedding
//! matrix fine-tuned by the network.

mod io;
mod matrix;
mod skipgram;

pub use io::{load_pretrained, save_word_vectors, PretrainedLoad};
pub use matrix::EmbeddingMatrix;
pub use skipgram::{drop_probability, positive_pairs, train_skipgram, SkipGramConfig, SkipGramOutput, NOISE_EXPONENT};
