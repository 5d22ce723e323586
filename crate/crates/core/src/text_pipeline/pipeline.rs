use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::normalize::normalize;
use super::porter::{PorterStemmer, Stemmer};
use super::scrub::{is_numeric, Scrubber, StopwordLanguage, ENTITY_TOKEN, NUMBER_TOKEN};

/// Output of the preprocessing pipeline for one text segment.
///
/// `spans[i]` is the byte range in the original text that produced
/// `tokens[i]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProcessedText {
    pub tokens: Vec<String>,
    pub spans: Vec<(usize, usize)>,
}

/// Normalize → stem → scrub, plus capitalization-based entity detection.
///
/// Stop-word, number and entity decisions are made on the normalized
/// surface form; surviving words are emitted as stems. Adjacent number
/// tokens (and adjacent entity tokens) collapse into one.
pub struct TextPipeline {
    stemmer: Box<dyn Stemmer>,
    scrubber: Scrubber,
    capitalization_entities: bool,
}

impl Default for TextPipeline {
    fn default() -> Self {
        TextPipeline::new(
            Box::new(PorterStemmer),
            Scrubber::new(StopwordLanguage::English.words(), Vec::new()),
            true,
        )
    }
}

struct Surface<'a> {
    text: &'a str,
    start: usize,
    sentence_start: bool,
}

fn push_surface<'a>(text: &'a str, s: usize, e: usize, out: &mut Vec<Surface<'a>>, sentence_start: &mut bool) {
    let piece = &text[s..e];
    out.push(Surface { text: piece, start: s, sentence_start: *sentence_start });
    *sentence_start = piece.ends_with(['.', '!', '?', ':']);
}

fn surface_tokens(text: &str) -> Vec<Surface<'_>> {
    let mut out = Vec::new();
    let mut sentence_start = true;
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                push_surface(text, s, i, &mut out, &mut sentence_start);
            }
            if ch == '\n' {
                sentence_start = true;
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        push_surface(text, s, text.len(), &mut out, &mut sentence_start);
    }
    out
}

fn starts_uppercase(s: &str) -> bool {
    s.chars().find(|c| c.is_alphanumeric()).is_some_and(char::is_uppercase)
}

impl TextPipeline {
    pub fn new(stemmer: Box<dyn Stemmer>, scrubber: Scrubber, capitalization_entities: bool) -> Self {
        TextPipeline { stemmer, scrubber, capitalization_entities }
    }

    pub fn stem(&self, token: &str) -> String {
        self.stemmer.stem(token)
    }

    pub fn scrubber(&self) -> &Scrubber {
        &self.scrubber
    }

    /// Surface forms treated as entities through capitalization history: a
    /// word capitalized away from a sentence start whose lowercase form
    /// never occurs in the document.
    fn capitalized_entities(&self, surfaces: &[Surface<'_>]) -> HashSet<String> {
        if !self.capitalization_entities {
            return HashSet::new();
        }
        let mut lowercase_seen = HashSet::new();
        let mut candidates = HashSet::new();
        for s in surfaces {
            if is_numeric(s.text) {
                continue;
            }
            let norm = normalize(s.text);
            if norm.is_empty() {
                continue;
            }
            if starts_uppercase(s.text) {
                if !s.sentence_start {
                    candidates.insert(norm);
                }
            } else {
                lowercase_seen.insert(norm);
            }
        }
        candidates.retain(|c| !lowercase_seen.contains(c));
        candidates
    }

    pub fn process(&self, text: &str) -> ProcessedText {
        let surfaces = surface_tokens(text);
        let entities = self.capitalized_entities(&surfaces);
        let mut out = ProcessedText::default();
        let emit = |tok: String, span: (usize, usize), out: &mut ProcessedText| {
            let special = tok == NUMBER_TOKEN || tok == ENTITY_TOKEN;
            if special && out.tokens.last() == Some(&tok) {
                out.spans.last_mut().unwrap().1 = span.1;
            } else {
                out.tokens.push(tok);
                out.spans.push(span);
            }
        };
        for s in &surfaces {
            let span = (s.start, s.start + s.text.len());
            if is_numeric(s.text) {
                emit(NUMBER_TOKEN.to_string(), span, &mut out);
                continue;
            }
            let norm = normalize(s.text);
            if norm.is_empty() {
                continue;
            }
            if entities.contains(&norm) || self.scrubber.is_entity(&norm) {
                emit(ENTITY_TOKEN.to_string(), span, &mut out);
                continue;
            }
            for word in norm.split(' ') {
                if self.scrubber.is_entity(word) {
                    emit(ENTITY_TOKEN.to_string(), span, &mut out);
                } else if !self.scrubber.is_stopword(word) {
                    emit(self.stemmer.stem(word), span, &mut out);
                }
            }
        }
        out
    }

    /// Tokens only.
    pub fn tokens(&self, text: &str) -> Vec<String> {
        self.process(text).tokens
    }
}
