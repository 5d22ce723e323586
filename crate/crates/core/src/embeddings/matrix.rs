use rand::Rng;

use crate::text_pipeline::PAD;

/// Dense `|V| x v` word vectors, row-major. The PAD row is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub weights: Vec<f64>,
    pub vocab_size: usize,
    pub dim: usize,
    /// Whether the network fine-tunes these vectors.
    pub trainable: bool,
}

impl EmbeddingMatrix {
    pub fn zeros(vocab_size: usize, dim: usize) -> Self {
        EmbeddingMatrix {
            weights: vec![0.0; vocab_size * dim],
            vocab_size,
            dim,
            trainable: true,
        }
    }

    /// Rows drawn from `uniform(-0.5/v, 0.5/v)`; PAD stays zero.
    pub fn random(vocab_size: usize, dim: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(vocab_size, dim);
        let bound = 0.5 / dim as f64;
        for id in 0..vocab_size {
            if id as u32 == PAD {
                continue;
            }
            for w in m.row_mut(id as u32) {
                *w = rng.gen_range(-bound..bound);
            }
        }
        m
    }

    pub fn row(&self, id: u32) -> &[f64] {
        let s = id as usize * self.dim;
        &self.weights[s..s + self.dim]
    }

    pub fn row_mut(&mut self, id: u32) -> &mut [f64] {
        let s = id as usize * self.dim;
        &mut self.weights[s..s + self.dim]
    }

    /// Embeds a block of token ids into a row-major `k x v` matrix. PAD rows
    /// are zero.
    pub fn lookup_block(&self, ids: &[u32]) -> Vec<f64> {
        let mut out = vec![0.0; ids.len() * self.dim];
        for (i, &id) in ids.iter().enumerate() {
            if id != PAD {
                out[i * self.dim..(i + 1) * self.dim].copy_from_slice(self.row(id));
            }
        }
        out
    }

    /// Cosine similarity between two rows.
    pub fn cosine(&self, a: u32, b: u32) -> f64 {
        let (x, y) = (self.row(a), self.row(b));
        let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
        let nx: f64 = x.iter().map(|p| p * p).sum::<f64>().sqrt();
        let ny: f64 = y.iter().map(|p| p * p).sum::<f64>().sqrt();
        if nx == 0.0 || ny == 0.0 {
            0.0
        } else {
            dot / (nx * ny)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn lookup_block_shapes_and_pad() {
        let e = EmbeddingMatrix::random(10, 300, &mut stream_rng(0, "e"));
        let block = e.lookup_block(&[3; 20]);
        assert_eq!(block.len(), 20 * 300);
        assert_eq!(&block[..300], &block[300..600]);
        assert!(e.lookup_block(&[PAD; 4]).iter().all(|&x| x == 0.0));
        assert!(e.row(PAD).iter().all(|&x| x == 0.0));
        assert!(e.row(5).iter().all(|&x| x.abs() <= 0.5 / 300.0));
    }
}
