//! A desk-scale laboratory for chart summarization with a visual
//! chain-of-thought: a tiny image-conditioned decoder first writes three
//! reasoning sentences (chart type, axes, trends) and then the summary.
//!
//! * [`chartgen`] synthesizes charts, renders them to pixels, and writes the
//!   reference reasoning and summary text alongside machine-checkable facts.
//! * [`numcore`] is the numeric substrate: tensors, reverse-mode autodiff,
//!   AdamW, and SplitMix64 streams.
//! * [`model`] holds the encoder/decoder, two-stage generation, LoRA and
//!   checkpoints.
//! * [`train`] builds instruction sequences, augments images, schedules the
//!   curriculum and runs the training loop.
//! * [`metrics`] scores generations (BLEU, CIDEr, perplexity, fact recall)
//!   and assembles reports.

pub mod numcore;
pub mod chartgen;
pub mod normalize;
pub mod model;
pub mod train;
pub mod metrics;
