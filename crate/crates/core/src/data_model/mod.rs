//! Firm-year schema, feature encoding and synthetic corpora.

mod encoder;
mod record;
mod synthetic;

pub use encoder::{quantile_sorted, FeatureEncoder, ENCODER_FORMAT_VERSION, WINSOR_HIGH_Q, WINSOR_LOW_Q};
pub use record::{
    read_corpus, write_corpus, FirmYearRecord, CATEGORICAL_NAMES, CONTINUOUS_NAMES, NUM_CATEGORICAL,
    NUM_CONTINUOUS,
};
pub use synthetic::{generate_synthetic, pseudo_word, SyntheticCorpusSpec};
