use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::scrub::{ENTITY_TOKEN, NUMBER_TOKEN};
use crate::error::{Error, Result};

pub const VOCAB_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_MIN_COUNT: usize = 25;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const NUMBER: u32 = 2;
pub const ENTITY: u32 = 3;
/// Separates the auditor and management streams in concatenated documents.
pub const SEP: u32 = 4;

pub const PAD_TOKEN: &str = "xxpadxx";
pub const UNK_TOKEN: &str = "xxunkxx";
pub const SEP_TOKEN: &str = "xxsepxx";

/// Special tokens in id order.
pub const SPECIAL_TOKENS: [&str; 5] = [PAD_TOKEN, UNK_TOKEN, NUMBER_TOKEN, ENTITY_TOKEN, SEP_TOKEN];

/// Token/id bijection. Ids below `SPECIAL_TOKENS.len()` are reserved.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    min_count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabularyFile {
    format_version: u32,
    min_count: usize,
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from token sequences, keeping tokens seen at
    /// least `min_count` times. Ids are assigned by descending frequency,
    /// ties broken lexicographically.
    pub fn build<'a, I, D>(docs: I, min_count: usize) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            for tok in doc {
                *counts.entry(tok.as_str()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_count && !SPECIAL_TOKENS.contains(t))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let tokens = SPECIAL_TOKENS
            .iter()
            .copied()
            .chain(kept.into_iter().map(|(t, _)| t))
            .map(str::to_string)
            .collect();
        Self::from_tokens(tokens, min_count)
    }

    fn from_tokens(tokens: Vec<String>, min_count: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, index, min_count }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Id of `token`, or [`UNK`] when out of vocabulary.
    pub fn lookup(&self, token: &str) -> u32 {
        self.id(token).unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.lookup(t.as_ref())).collect()
    }

    /// Content hash of the ordered token list.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update((t.len() as u64).to_le_bytes());
            h.update(t.as_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&VocabularyFile {
            format_version: VOCAB_FORMAT_VERSION,
            min_count: self.min_count,
            tokens: self.tokens.clone(),
        })
        .expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: VocabularyFile =
            serde_json::from_str(text).map_err(|e| Error::json("vocabulary", e))?;
        if file.format_version != VOCAB_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported vocabulary format_version {}",
                file.format_version
            )));
        }
        if file.tokens.len() < SPECIAL_TOKENS.len()
            || file.tokens[..SPECIAL_TOKENS.len()] != SPECIAL_TOKENS
        {
            return Err(Error::Data("vocabulary does not start with the special tokens".into()));
        }
        let vocab = Self::from_tokens(file.tokens, file.min_count);
        if vocab.index.len() != vocab.tokens.len() {
            return Err(Error::Data("vocabulary contains duplicate tokens".into()));
        }
        Ok(vocab)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::io(format!("write {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("read {}", path.display()), e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(spec: &[(&str, usize)]) -> Vec<String> {
        spec.iter().flat_map(|(t, n)| std::iter::repeat(t.to_string()).take(*n)).collect()
    }

    #[test]
    fn min_count_threshold() {
        let d = doc(&[("rare", 24), ("common", 25)]);
        let v = Vocabulary::build([&d], DEFAULT_MIN_COUNT);
        assert_eq!(v.lookup("rare"), UNK);
        assert_eq!(v.id("common"), Some(SPECIAL_TOKENS.len() as u32));
    }

    #[test]
    fn min_count_one_keeps_everything_and_ties_are_lexicographic() {
        let d = doc(&[("b", 2), ("a", 2), ("c", 3)]);
        let v = Vocabulary::build([&d], 1);
        let base = SPECIAL_TOKENS.len() as u32;
        assert_eq!(v.id("c"), Some(base));
        assert_eq!(v.id("a"), Some(base + 1));
        assert_eq!(v.id("b"), Some(base + 2));
        assert_eq!(v.id(PAD_TOKEN), Some(PAD));
        assert_eq!(v.id(NUMBER_TOKEN), Some(NUMBER));
    }

    #[test]
    fn specials_are_not_double_counted() {
        let d = doc(&[(NUMBER_TOKEN, 50), ("x", 30)]);
        let v = Vocabulary::build([&d], 25);
        assert_eq!(v.len(), SPECIAL_TOKENS.len() + 1);
    }

    #[test]
    fn json_round_trip() {
        let d = doc(&[("b", 2), ("a", 5)]);
        let v = Vocabulary::build([&d], 1);
        let back = Vocabulary::from_json(&v.to_json()).unwrap();
        assert_eq!(v, back);
        assert_eq!(v.content_hash(), back.content_hash());
        assert!(Vocabulary::from_json(&v.to_json().replace("xxpadxx", "zz")).is_err());
    }
}
