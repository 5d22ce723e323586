use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

pub const NUMBER_TOKEN: &str = "xxnumberxx";
pub const ENTITY_TOKEN: &str = "xxentityxx";

/// Built-in stop-word lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopwordLanguage {
    English,
    Danish,
    None,
}

impl StopwordLanguage {
    pub fn words(self) -> Vec<String> {
        let raw = match self {
            StopwordLanguage::English => include_str!("stopwords/english.txt"),
            StopwordLanguage::Danish => include_str!("stopwords/danish.txt"),
            StopwordLanguage::None => "",
        };
        parse_word_list(raw)
    }
}

fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Reads a plain-text word list, one token per line.
pub fn read_word_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("read {}", path.display()), e))?;
    Ok(parse_word_list(&text))
}

/// True when a token encodes a number (any digit).
pub fn is_numeric(token: &str) -> bool {
    token.chars().any(|c| c.is_ascii_digit())
}

/// Removes stop words and replaces numbers and known entities.
#[derive(Debug, Clone, Default)]
pub struct Scrubber {
    stopwords: HashSet<String>,
    entities: HashSet<String>,
}

impl Scrubber {
    pub fn new(stopwords: impl IntoIterator<Item = String>, entities: impl IntoIterator<Item = String>) -> Self {
        Scrubber {
            stopwords: stopwords.into_iter().collect(),
            entities: entities.into_iter().map(|e| e.to_lowercase()).collect(),
        }
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }

    pub fn is_entity(&self, token: &str) -> bool {
        self.entities.contains(token)
    }

    /// Scrubs normalized tokens: stop words are dropped, numeric tokens
    /// become [`NUMBER_TOKEN`] and dictionary entities become [`ENTITY_TOKEN`].
    pub fn scrub<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<String> {
        tokens
            .iter()
            .filter_map(|t| {
                let t = t.as_ref();
                if is_numeric(t) {
                    Some(NUMBER_TOKEN.to_string())
                } else if self.is_entity(t) {
                    Some(ENTITY_TOKEN.to_string())
                } else if self.is_stopword(t) {
                    None
                } else {
                    Some(t.to_string())
                }
            })
            .collect()
    }
}
