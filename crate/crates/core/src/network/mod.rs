//! Convolutional-recurrent attention network: per-block convolution and
//! max-pooling, an LSTM over block representations, attention pooling,
//! fusion with numerical features and a dense head.

pub mod adam;
pub mod attention;
pub mod checkpoint;
pub mod config;
pub mod conv;
pub mod data;
pub mod gradcheck;
pub mod head;
pub mod loss;
pub mod lstm;
pub mod model;
pub mod params;
pub mod train;

pub use adam::{adam_step, AdamState};
pub use attention::{attention_backward, attention_forward, AttentionHead, AttentionOutput};
pub use checkpoint::{from_bytes, load_checkpoint, save_checkpoint, to_bytes, CHECKPOINT_FORMAT_VERSION};
pub use config::{GridSpec, NetworkConfig, TextMode};
pub use conv::{conv_backward, conv_forward, ConvCache, ConvLayer, ConvShape};
pub use data::{build_example, EncodedText};
pub use gradcheck::{gradient_check, BlockCheck, GradCheckReport};
pub use head::{head_backward, head_forward, DenseHead, HeadCache, HeadShape};
pub use loss::{bce_loss, bce_with_logit, sigmoid, PROB_EPS};
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmCell, LstmShape};
pub use model::{BlockAttention, Example, GRAD_CHUNK};
pub use params::{ModelMeta, NetworkParams, ParamBlock, ParamLayout};
pub use train::{make_batches, split_validation, train, EpochRecord, Trainer, TrainingLog};
