//! Automatic evaluation: BLEU, CIDEr, perplexity, fact recall, an error
//! taxonomy, and report tables.

mod facts;
mod ngram;
mod pipeline;
mod report;

pub use facts::{classify_error, cs_score, ErrorType, NUMBER_TOLERANCE, RECALL_THRESHOLD};
pub use ngram::{bleu, bleu_multi, cider, cider_per_pair, CIDER_SCALE, IDF_FLOOR, MAX_N};
pub use pipeline::{
    evaluate, generate_eval_records, perplexity, run_ablation, AblationRow, AblationRun, ComplexityBin, EvalRecord,
};
pub use report::{build_report, ErrorRow, GroupRow, Overall, Report, Table};

use crate::chartgen::ChartError;
use crate::model::ModelError;
use crate::train::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("nothing to score: the corpus is empty")]
    EmptyCorpus,
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("a candidate has no reference")]
    NoReference,
    #[error("no summary tokens to score")]
    NoSummaryTokens,
    #[error("malformed report: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
