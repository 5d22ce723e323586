use serde::{Deserialize, Serialize};

use super::config::TextMode;
use super::model::Example;
use crate::error::Result;
use crate::text_pipeline::{blockify, BlockSequence, SEP};

/// Vocabulary ids of both text segments of one record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedText {
    pub auditor: Vec<u32>,
    pub management: Vec<u32>,
}

impl EncodedText {
    /// The token stream seen by a model in `mode`; the joint mode separates
    /// the segments with the separator token.
    pub fn select(&self, mode: TextMode) -> Option<Vec<u32>> {
        match mode {
            TextMode::Aud => Some(self.auditor.clone()),
            TextMode::Man => Some(self.management.clone()),
            TextMode::AudMan => {
                let mut ids = Vec::with_capacity(self.auditor.len() + 1 + self.management.len());
                ids.extend_from_slice(&self.auditor);
                ids.push(SEP);
                ids.extend_from_slice(&self.management);
                Some(ids)
            }
            TextMode::None => None,
        }
    }

    pub fn blocks(&self, mode: TextMode, block_size: usize) -> Result<Option<BlockSequence>> {
        self.select(mode).map(|ids| blockify(&ids, block_size)).transpose()
    }
}

pub fn build_example(
    text: &EncodedText,
    features: Vec<f64>,
    label: f64,
    mode: TextMode,
    block_size: usize,
) -> Result<Example> {
    Ok(Example { blocks: text.blocks(mode, block_size)?, features, label })
}
