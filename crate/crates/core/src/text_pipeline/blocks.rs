use serde::{Deserialize, Serialize};

use super::vocab::PAD;
use crate::error::{Error, Result};

/// Which text segment a document came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Auditor,
    Management,
    Concatenated,
}

/// A document as a sequence of vocabulary ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub ids: Vec<u32>,
    pub source_segment: Segment,
}

/// Half-overlapping token blocks of one document.
///
/// Block `t` covers tokens `t*s .. t*s + k` with step `s = floor(k/2)`; the
/// last block is padded
/// with [`PAD`]. Blocks appended by [`BlockSequence::pad_to`] are inactive
/// and carry no tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSequence {
    k: usize,
    ids: Vec<u32>,
    active: Vec<bool>,
    n_tokens: usize,
}

impl BlockSequence {
    pub fn block_size(&self) -> usize {
        self.k
    }

    /// Number of blocks, including inactive padding blocks.
    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Number of real tokens in the source document.
    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    /// True for a document that had no tokens at all.
    pub fn is_empty_doc(&self) -> bool {
        self.n_tokens == 0
    }

    /// Token ids of block `t`.
    pub fn block(&self, t: usize) -> &[u32] {
        &self.ids[t * self.k..(t + 1) * self.k]
    }

    /// Whether block `t` belongs to the document (as opposed to batch padding).
    pub fn is_active(&self, t: usize) -> bool {
        self.active[t]
    }

    pub fn mask(&self) -> &[bool] {
        &self.active
    }

    /// Number of active blocks.
    pub fn active_len(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    /// Document-token offset of the first token in block `t`.
    pub fn offset(&self, t: usize) -> usize {
        t * (self.k / 2)
    }

    /// Document-token positions covered by block `t` (excluding PAD tail).
    pub fn token_range(&self, t: usize) -> std::ops::Range<usize> {
        if !self.active[t] {
            return 0..0;
        }
        let start = self.offset(t).min(self.n_tokens);
        start..(start + self.k).min(self.n_tokens)
    }

    /// Appends inactive all-PAD blocks until the sequence has `t` blocks.
    pub fn pad_to(&mut self, t: usize) {
        while self.active.len() < t {
            self.ids.extend(std::iter::repeat(PAD).take(self.k));
            self.active.push(false);
        }
    }
}

/// Splits a document into half-overlapping blocks of `k` tokens (step `floor(k/2)`).
/// An empty document yields a single all-PAD block.
pub fn blockify(ids: &[u32], k: usize) -> Result<BlockSequence> {
    if k < 2 {
        return Err(Error::Config(format!("block size must be at least 2, found {k}")));
    }
    let n = ids.len();
    let step = k / 2;
    let t = if n <= k { 1 } else { (n - k).div_ceil(step) + 1 };
    let mut out = Vec::with_capacity(t * k);
    for b in 0..t {
        let start = b * step;
        for i in start..start + k {
            out.push(ids.get(i).copied().unwrap_or(PAD));
        }
    }
    Ok(BlockSequence {
        k,
        ids: out,
        active: vec![true; t],
        n_tokens: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(n: u32) -> Vec<u32> {
        (1..=n).map(|i| i + 10).collect()
    }

    /// Membership oracle: which blocks contain document position `i`.
    fn memberships(b: &BlockSequence, i: usize) -> usize {
        (0..b.len()).filter(|&t| b.token_range(t).contains(&i)).count()
    }

    #[test]
    fn thirty_tokens_k20() {
        let ids = seq(30);
        let b = blockify(&ids, 20).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.block(0), &ids[0..20]);
        assert_eq!(b.block(1), &ids[10..30]);
    }

    #[test]
    fn exact_fit() {
        let ids = seq(20);
        let b = blockify(&ids, 20).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.block(0), &ids[..]);
    }

    #[test]
    fn twenty_five_tokens_k20() {
        let ids = seq(25);
        let b = blockify(&ids, 20).unwrap();
        // offsets 0 and 10 enumerated by brute force over coverage
        let offsets: Vec<usize> = (0..b.len()).map(|t| b.offset(t)).collect();
        assert_eq!(offsets, vec![0, 10]);
        assert_eq!(b.block(0), &ids[0..20]);
        assert_eq!(&b.block(1)[..15], &ids[10..25]);
        assert_eq!(&b.block(1)[15..], &[PAD; 5]);
        for i in 0..25 {
            assert!(memberships(&b, i) >= 1);
        }
    }

    #[test]
    fn short_and_empty_docs() {
        let b = blockify(&seq(3), 6).unwrap();
        assert_eq!(b.block(0), &[11, 12, 13, PAD, PAD, PAD]);
        let e = blockify(&[], 6).unwrap();
        assert_eq!(e.len(), 1);
        assert!(e.is_empty_doc());
        assert!(e.is_active(0));
        assert_eq!(e.block(0), &[PAD; 6]);
    }

    #[test]
    fn invalid_block_sizes() {
        assert!(blockify(&seq(5), 1).is_err());
        assert!(blockify(&seq(5), 0).is_err());
    }

    #[test]
    fn odd_block_size_steps_by_floor_half() {
        let ids = seq(30);
        let b = blockify(&ids, 15).unwrap();
        let offsets: Vec<usize> = (0..b.len()).map(|t| b.offset(t)).collect();
        assert_eq!(offsets, vec![0, 7, 14, 21]);
        assert_eq!(b.block(2), &ids[14..29]);
        for i in 0..30 {
            assert!(memberships(&b, i) >= 1);
        }
    }

    #[test]
    fn padding_blocks_are_inactive() {
        let mut b = blockify(&seq(8), 4).unwrap();
        let t = b.len();
        b.pad_to(t + 2);
        assert_eq!(b.len(), t + 2);
        assert_eq!(b.active_len(), t);
        assert!(!b.is_active(t));
        assert_eq!(b.token_range(t + 1), 0..0);
    }
}
