//! Text preprocessing: normalization, stemming, scrubbing, vocabulary and
//! half-overlapping blockification.

mod blocks;
mod normalize;
mod pipeline;
mod porter;
mod scrub;
mod vocab;

pub use blocks::{blockify, BlockSequence, Segment, TokenizedDoc};
pub use normalize::normalize;
pub use pipeline::{ProcessedText, TextPipeline};
pub use porter::{stem, IdentityStemmer, PorterStemmer, Stemmer};
pub use scrub::{is_numeric, read_word_list, Scrubber, StopwordLanguage, ENTITY_TOKEN, NUMBER_TOKEN};
pub use vocab::{
    Vocabulary, DEFAULT_MIN_COUNT, ENTITY, NUMBER, PAD, PAD_TOKEN, SEP, SEP_TOKEN, SPECIAL_TOKENS, UNK,
    UNK_TOKEN, VOCAB_FORMAT_VERSION,
};
