//! Two-stage decoding: reasoning first, then a summary conditioned on it.

use super::net::{decode_logits, encode_image};
use super::vocab::{BOS, EOS, REASON_CLOSE, REASON_OPEN, SUMMARY_CLOSE, SUMMARY_OPEN};
use super::{ModelError, ModelParams, Vocabulary};
use crate::chartgen::RenderedChart;
use crate::numcore::PrngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecodeStrategy {
    Greedy,
    /// Temperature sampling from a seeded stream.
    Sample { temperature: f64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecodeConfig {
    pub reasoning_cap: usize,
    pub summary_cap: usize,
    pub strategy: DecodeStrategy,
    /// Whether to run the reasoning stage. Off for models trained without
    /// reasoning segments; the summary then follows the instruction directly.
    pub vcot: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            reasoning_cap: 64,
            summary_cap: 96,
            strategy: DecodeStrategy::Greedy,
            vcot: true,
        }
    }
}

/// Generated token ids, markers excluded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Generation {
    pub reasoning: Vec<usize>,
    pub summary: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq)]
enum Stage {
    Reasoning,
    Summary,
}

fn allowed(vocab: &Vocabulary, stage: Stage, prev: usize, id: usize) -> bool {
    if Vocabulary::is_special(id) {
        return match stage {
            Stage::Reasoning => id == REASON_CLOSE,
            Stage::Summary => id == SUMMARY_CLOSE || id == EOS,
        };
    }
    !vocab.is_continuation(id) || vocab.is_digit(prev)
}

fn pick(row: &[f64], vocab: &Vocabulary, stage: Stage, prev: usize, strategy: DecodeStrategy, rng: &mut PrngStream) -> usize {
    let ok = |id: usize| id < vocab.len() && allowed(vocab, stage, prev, id);
    match strategy {
        DecodeStrategy::Greedy => {
            let mut best = None;
            for (id, &v) in row.iter().enumerate() {
                if ok(id) && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((id, v));
                }
            }
            best.map(|(id, _)| id).unwrap_or(EOS)
        }
        DecodeStrategy::Sample { temperature, .. } => {
            let t = temperature.max(1e-6);
            let m = row
                .iter()
                .enumerate()
                .filter(|(id, _)| ok(*id))
                .map(|(_, v)| *v)
                .fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = row
                .iter()
                .enumerate()
                .map(|(id, v)| if ok(id) { ((v - m) / t).exp() } else { 0.0 })
                .collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.uniform() * total;
            for (id, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    if u < *w {
                        return id;
                    }
                    u -= w;
                }
            }
            weights.iter().rposition(|w| *w > 0.0).unwrap_or(EOS)
        }
    }
}

/// Decodes a reasoning segment from `REASON_OPEN` until `REASON_CLOSE` or
/// the cap, then a summary from `SUMMARY_OPEN` until `SUMMARY_CLOSE`, `EOS`
/// or the cap. The image is encoded once.
pub fn generate_vcot(
    params: &ModelParams,
    vocab: &Vocabulary,
    image: &RenderedChart,
    instruction: &str,
    config: &DecodeConfig,
) -> Result<Generation, ModelError> {
    let features = encode_image(params, image)?;
    let seed = match config.strategy {
        DecodeStrategy::Sample { seed, .. } => seed,
        DecodeStrategy::Greedy => 0,
    };
    let mut rng = PrngStream::new(seed, 0x6e6);
    let max_len = params.config.max_positions;
    let mut prefix = vec![BOS];
    prefix.extend(vocab.encode(instruction)?);
    let mut out = Generation::default();

    let mut run = |prefix: &mut Vec<usize>, stage: Stage, cap: usize, dest: &mut Vec<usize>| -> Result<(), ModelError> {
        while dest.len() < cap && prefix.len() < max_len {
            let logits = decode_logits(params, &features, prefix)?;
            let last = logits.row(logits.dims2().0 - 1);
            let prev = *prefix.last().expect("prefix starts with BOS");
            let next = pick(last, vocab, stage, prev, config.strategy, &mut rng);
            if Vocabulary::is_special(next) {
                break;
            }
            dest.push(next);
            prefix.push(next);
        }
        Ok(())
    };

    if config.vcot {
        prefix.push(REASON_OPEN);
        run(&mut prefix, Stage::Reasoning, config.reasoning_cap, &mut out.reasoning)?;
        prefix.push(REASON_CLOSE);
    }
    prefix.push(SUMMARY_OPEN);
    run(&mut prefix, Stage::Summary, config.summary_cap, &mut out.summary)?;
    Ok(out)
}
