//! Synthetic chart corpus: specs, rendering, facts, texts, stages and
//! persistence.

mod corpus;
mod facts;
pub mod font;
mod render;
mod sample;
mod spec;
mod stage;
mod text;

use std::path::PathBuf;

pub use corpus::{generate_corpus, load_corpus, read_corpus, save_corpus, write_corpus, CorpusRecord};
pub use facts::{
    derive_facts, dominant_series, slice_share, Fact, FactKind, FactList, FactValue, Trend, ORDINALS,
};
pub use render::{
    render_chart, series_intensity, slice_intensity, Layout, RenderedChart, DEFAULT_RESOLUTION,
    MIN_RESOLUTION, X_TICKS, Y_TICKS,
};
pub use sample::sample_spec;
pub use spec::{ChartKind, ChartSpec, NamedSeries, MAX_SERIES, MAX_VALUE};
pub use stage::{complexity_stage, length_bin, series_bin, type_rank, STAGES};
pub use text::{generate_texts, lexicon, INSTRUCTIONS, MONTHS, SERIES_NAMES};

#[derive(Debug, thiserror::Error)]
pub enum ChartError {
    #[error("invalid chart spec: {0}")]
    InvalidSpec(String),
    #[error("resolution {resolution} cannot fit margins and tick glyphs (minimum {min})")]
    Sizing { resolution: usize, min: usize },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: record {id} stores stage {stored} but its content is stage {computed}")]
    StageMismatch {
        line: usize,
        id: String,
        stored: u8,
        computed: u8,
    },
    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
