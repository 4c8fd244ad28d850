//! Image encoder, autoregressive text decoder with cross-attention, explicit
//! two-stage reasoning/summary decoding, LoRA adapters and checkpoints.

mod checkpoint;
mod config;
mod generate;
mod lora;
mod net;
mod params;
mod sequence;
mod vocab;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, FORMAT_VERSION, MAGIC};
pub use config::{param_specs, Init, ModelConfig, ParamSpec};
pub use generate::{generate_vcot, DecodeConfig, DecodeStrategy, Generation};
pub use lora::{attention_targets, lora_inject, lora_merge, LoraAdapter};
pub use net::{
    decode_logits, decoder_forward, encode_image, encoder_forward, patchify, sequence_log_prob, teacher_forced_loss,
    FeatureMap, SequenceLogProb,
};
pub use params::{init_model, Binding, ModelParams, Param};
pub use sequence::{build_sequence, Segments};
pub use vocab::{
    Vocabulary, BOS, EOS, PAD, REASON_CLOSE, REASON_OPEN, SPECIAL_TOKENS, SUMMARY_CLOSE, SUMMARY_OPEN,
};

use crate::numcore::NumError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("word {0:?} is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("token id {id} is outside the vocabulary of {vocab}")]
    TokenOutOfRange { id: usize, vocab: usize },
    #[error("sequence of {len} tokens exceeds {max} positions")]
    SequenceTooLong { len: usize, max: usize },
    #[error("image {width}x{height} does not fit patch size {patch} and image size {expected}")]
    ImageSize {
        width: usize,
        height: usize,
        patch: usize,
        expected: usize,
    },
    #[error("malformed sequence: {0}")]
    Segments(String),
    #[error("unknown LoRA target {0:?}")]
    UnknownTarget(String),
    #[error("LoRA rank must be at least 1")]
    InvalidRank,
    #[error("unknown parameter {0:?}")]
    UnknownParam(String),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint format version {0}")]
    UnsupportedVersion(u32),
    #[error("checkpoint truncated: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("parameter {name}: manifest shape {manifest:?} but configuration implies {expected:?}")]
    ShapeMismatch {
        name: String,
        manifest: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("checkpoint manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
