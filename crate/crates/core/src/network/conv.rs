//! Per-block convolution over word positions followed by stride-1 max-pooling.

use crate::error::{Error, Result};

/// Geometry of the convolutional layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    /// Words per block (`k`).
    pub block_size: usize,
    /// Embedding dimension (`v`).
    pub dim: usize,
    /// Words covered by one filter (`γ`).
    pub width: usize,
    /// Number of filters (`m`).
    pub filters: usize,
    /// Max-pool window (`τ`).
    pub pool: usize,
}

impl ConvShape {
    /// Valid convolution positions: `k - γ + 1`.
    pub fn conv_len(&self) -> usize {
        self.block_size + 1 - self.width
    }

    /// Valid pooling positions: `k - γ - τ + 2`.
    pub fn pooled_len(&self) -> usize {
        self.conv_len() + 1 - self.pool
    }

    /// Length of the concatenated block representation.
    pub fn output_len(&self) -> usize {
        self.pooled_len() * self.filters
    }

    pub fn filter_len(&self) -> usize {
        self.width * self.dim
    }

    pub fn param_len(&self) -> usize {
        self.filters * self.filter_len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.width >= self.block_size {
            return Err(Error::Config(format!(
                "filter width {} must satisfy 0 < width < block size {}",
                self.width, self.block_size
            )));
        }
        if self.pool == 0 || self.pool > self.conv_len() {
            return Err(Error::Config(format!(
                "pool size {} must lie in 1..={}",
                self.pool,
                self.conv_len()
            )));
        }
        if self.filters == 0 || self.dim == 0 {
            return Err(Error::Config("filters and embedding dimension must be positive".into()));
        }
        Ok(())
    }
}

/// Filter bank view: `filters` row-major `width x dim` matrices.
#[derive(Debug, Clone, Copy)]
pub struct ConvLayer<'a> {
    pub shape: ConvShape,
    pub weights: &'a [f64],
}

/// Conv-position index chosen by each pooling window, per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvCache {
    pub argmax: Vec<u32>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Convolves a row-major `k x v` block with every filter and max-pools the
/// responses. Output is `[z^(1), ..., z^(m)]`.
pub fn conv_forward(block: &[f64], layer: &ConvLayer<'_>) -> Result<(Vec<f64>, ConvCache)> {
    let s = layer.shape;
    if block.len() != s.block_size * s.dim {
        return Err(Error::Shape(format!(
            "block has {} values, expected {}x{}",
            block.len(),
            s.block_size,
            s.dim
        )));
    }
    if layer.weights.len() != s.param_len() {
        return Err(Error::Shape(format!(
            "filter bank has {} values, expected {}",
            layer.weights.len(),
            s.param_len()
        )));
    }
    let (conv_len, pooled_len, flen) = (s.conv_len(), s.pooled_len(), s.filter_len());
    let mut z = Vec::with_capacity(s.output_len());
    let mut argmax = Vec::with_capacity(s.output_len());
    let mut x = vec![0.0; conv_len];
    for filter in layer.weights.chunks_exact(flen) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = dot(filter, &block[i * s.dim..i * s.dim + flen]);
        }
        for i in 0..pooled_len {
            let mut best = i;
            for j in i + 1..i + s.pool {
                // Strict comparison keeps the lowest index on ties.
                if x[j] > x[best] {
                    best = j;
                }
            }
            z.push(x[best]);
            argmax.push(best as u32);
        }
    }
    Ok((z, ConvCache { argmax }))
}

/// Accumulates filter gradients into `dweights` and, when given, block
/// gradients into `dblock`. Pooling routes each gradient entry to its cached
/// argmax position only.
pub fn conv_backward(
    dz: &[f64],
    block: &[f64],
    layer: &ConvLayer<'_>,
    cache: &ConvCache,
    dweights: &mut [f64],
    mut dblock: Option<&mut [f64]>,
) {
    let s = layer.shape;
    let (conv_len, pooled_len, flen) = (s.conv_len(), s.pooled_len(), s.filter_len());
    let mut dx = vec![0.0; conv_len];
    for p in 0..s.filters {
        dx.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..pooled_len {
            let idx = p * pooled_len + i;
            dx[cache.argmax[idx] as usize] += dz[idx];
        }
        let filter = &layer.weights[p * flen..(p + 1) * flen];
        let dfilter = &mut dweights[p * flen..(p + 1) * flen];
        for (i, &g) in dx.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let window = &block[i * s.dim..i * s.dim + flen];
            for (dw, &b) in dfilter.iter_mut().zip(window) {
                *dw += g * b;
            }
            if let Some(db) = dblock.as_deref_mut() {
                for (d, &w) in db[i * s.dim..i * s.dim + flen].iter_mut().zip(filter) {
                    *d += g * w;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry() {
        let s = ConvShape { block_size: 20, dim: 300, width: 10, filters: 40, pool: 4 };
        assert_eq!(s.conv_len(), 11);
        assert_eq!(s.pooled_len(), 8);
        assert_eq!(s.output_len(), 320);
    }

    #[test]
    fn hand_computed_single_filter() {
        let s = ConvShape { block_size: 3, dim: 1, width: 2, filters: 1, pool: 1 };
        let layer = ConvLayer { shape: s, weights: &[1.0, 1.0] };
        let (z, _) = conv_forward(&[1.0, 2.0, 3.0], &layer).unwrap();
        assert_eq!(z, vec![3.0, 5.0]);
    }

    #[test]
    fn zero_filters_give_zero_output() {
        let s = ConvShape { block_size: 6, dim: 2, width: 3, filters: 2, pool: 2 };
        let w = vec![0.0; s.param_len()];
        let block: Vec<f64> = (0..12).map(f64::from).collect();
        let (z, _) = conv_forward(&block, &ConvLayer { shape: s, weights: &w }).unwrap();
        assert_eq!(z, vec![0.0; s.output_len()]);
    }

    #[test]
    fn ties_route_to_lowest_index() {
        let s = ConvShape { block_size: 4, dim: 1, width: 1, filters: 1, pool: 3 };
        let layer = ConvLayer { shape: s, weights: &[1.0] };
        let block = [2.0, 2.0, 2.0, 1.0];
        let (z, cache) = conv_forward(&block, &layer).unwrap();
        assert_eq!(z, vec![2.0, 2.0]);
        assert_eq!(cache.argmax, vec![0, 1]);
        let mut dw = vec![0.0];
        let mut db = vec![0.0; 4];
        conv_backward(&[1.0, 1.0], &block, &layer, &cache, &mut dw, Some(&mut db));
        assert_eq!(db, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(dw, vec![4.0]);
    }

    #[test]
    fn shape_errors() {
        let s = ConvShape { block_size: 3, dim: 1, width: 2, filters: 1, pool: 1 };
        let layer = ConvLayer { shape: s, weights: &[1.0, 1.0] };
        assert!(matches!(conv_forward(&[1.0, 2.0], &layer), Err(Error::Shape(_))));
        let bad = ConvShape { width: 3, ..s };
        assert!(bad.validate().is_err());
    }
}
