//! Instruction fine-tuning: sequences with loss masks, augmentation, the
//! curriculum, the training loop and ablation variants.

mod augment;
mod config;
mod curriculum;
mod fit;
mod step;

pub use augment::{affine, apply_params, augment, augment_batch, rotate, sample_params, sample_stream, AugmentConfig, AugmentParams};
pub use config::{ablation_variant, TrainConfig, Variant};
pub use curriculum::{curriculum_order, CurriculumSchedule};
pub use fit::{
    build_vocabulary, evaluate_nll, fit, history_table, split_corpus, CorpusSplit, FitResult, HistoryRow, StopReason,
    HISTORY_HEADER,
};
pub use step::{build_training_sequence, mean_nll, train_step, TrainExample, TrainingSequence};

use crate::chartgen::ChartError;
use crate::model::ModelError;
use crate::numcore::NumError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid training configuration: {0}")]
    Invalid(String),
    #[error("unknown variant {0:?} (expected full, no_vcot, no_aug or no_curriculum)")]
    UnknownVariant(String),
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("loss is {loss} at step {step}")]
    NonFinite { step: u64, loss: f64 },
    #[error("gradient of {param} is not finite at step {step}")]
    NonFiniteGradient { step: u64, param: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}
