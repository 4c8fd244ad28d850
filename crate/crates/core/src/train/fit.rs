//! The training loop.

use std::fmt::Write as _;

use super::{
    augment_batch, build_training_sequence, curriculum_order, mean_nll, train_step, TrainConfig, TrainError,
    TrainExample, TrainingSequence,
};
use crate::chartgen::{lexicon, render_chart, CorpusRecord, RenderedChart, INSTRUCTIONS};
use crate::model::{attention_targets, init_model, lora_inject, patchify, ModelParams, Vocabulary};
use crate::numcore::{AdamWConfig, OptimizerState};

/// Vocabulary covering the templates, prompts and every text in `records`.
pub fn build_vocabulary(records: &[CorpusRecord]) -> Vocabulary {
    let lex = lexicon();
    let texts = records
        .iter()
        .flat_map(|r| [r.reasoning.as_str(), r.summary.as_str()])
        .chain(INSTRUCTIONS)
        .chain(lex.iter().map(String::as_str));
    Vocabulary::build(texts)
}

/// Train, validation and test records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<CorpusRecord>,
    pub val: Vec<CorpusRecord>,
    pub test: Vec<CorpusRecord>,
}

/// 80/10/10 by position: index 8 of every ten goes to validation, index 9
/// to test.
pub fn split_corpus(records: &[CorpusRecord]) -> CorpusSplit {
    let mut s = CorpusSplit::default();
    for (i, r) in records.iter().enumerate() {
        match i % 10 {
            8 => s.val.push(r.clone()),
            9 => s.test.push(r.clone()),
            _ => s.train.push(r.clone()),
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub train_nll: f64,
    pub val_nll: f64,
    pub stage: u8,
    /// Optimizer steps taken so far.
    pub steps: usize,
}

pub const HISTORY_HEADER: [&str; 5] = ["epoch", "train_nll", "val_nll", "stage", "steps"];

/// Tab-separated history with a header line.
pub fn history_table(rows: &[HistoryRow]) -> String {
    let mut s = HISTORY_HEADER.join("\t");
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}\t{:.6}\t{:.6}\t{}\t{}", r.epoch, r.train_nll, r.val_nll, r.stage, r.steps);
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Plateau,
    MaxEpochs,
    MaxSteps,
}

pub struct FitResult {
    /// Parameters from the epoch with the lowest validation NLL.
    pub params: ModelParams,
    pub history: Vec<HistoryRow>,
    pub best_epoch: usize,
    pub best_val_nll: f64,
    pub steps: usize,
    pub stop: StopReason,
}

struct Prepared {
    images: Vec<RenderedChart>,
    sequences: Vec<TrainingSequence>,
}

fn prepare(records: &[CorpusRecord], vocab: &Vocabulary, config: &TrainConfig) -> Result<Prepared, TrainError> {
    let images = records
        .iter()
        .map(|r| render_chart(&r.spec, config.model.image_size))
        .collect::<Result<Vec<_>, _>>()?;
    let sequences = records
        .iter()
        .map(|r| build_training_sequence(r, vocab, config.variant))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Prepared { images, sequences })
}

/// Teacher-forced validation NLL per scored token on clean images.
pub fn evaluate_nll(
    params: &ModelParams,
    records: &[CorpusRecord],
    vocab: &Vocabulary,
    config: &TrainConfig,
) -> Result<f64, TrainError> {
    let prep = prepare(records, vocab, config)?;
    let examples = prep
        .images
        .iter()
        .zip(&prep.sequences)
        .map(|(img, seq)| {
            Ok(TrainExample {
                patches: patchify(img, &params.config)?,
                sequence: seq,
            })
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    mean_nll(params, &examples)
}

/// Trains from scratch and returns the best-validation parameters.
///
/// Validation runs after every epoch. Once the final curriculum stage is
/// reached, an epoch counts against `patience` unless validation NLL beats
/// the reference by the relative `min_delta`; earlier epochs never do.
pub fn fit(
    config: &TrainConfig,
    train: &[CorpusRecord],
    val: &[CorpusRecord],
    vocab: &Vocabulary,
) -> Result<FitResult, TrainError> {
    config.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptySplit("train"));
    }
    if val.is_empty() {
        return Err(TrainError::EmptySplit("validation"));
    }
    let mut model_config = config.model.clone();
    model_config.vocab_size = vocab.len();
    let mut params = init_model(&model_config, config.seed)?;
    if let Some(r) = config.lora_rank {
        params = lora_inject(&params, &attention_targets(&model_config), r, config.seed)?;
    }
    let mut opt = OptimizerState::new(AdamWConfig {
        lr: config.lr,
        weight_decay: config.weight_decay,
        ..AdamWConfig::default()
    });

    let tr = prepare(train, vocab, config)?;
    let va = prepare(val, vocab, config)?;
    let val_examples = va
        .images
        .iter()
        .zip(&va.sequences)
        .map(|(img, seq)| {
            Ok(TrainExample {
                patches: patchify(img, &model_config)?,
                sequence: seq,
            })
        })
        .collect::<Result<Vec<_>, TrainError>>()?;

    let mut history = Vec::new();
    let mut best = (f64::INFINITY, params.clone(), 0usize);
    let mut reference: Option<f64> = None;
    let mut stale = 0;
    let mut steps = 0;
    let mut stop = StopReason::MaxEpochs;
    let final_epoch = config.curriculum.final_stage_epoch();

    'epochs: for epoch in 0..config.max_epochs {
        let stage = config.curriculum.stage_for_epoch(epoch);
        let pool = curriculum_order(train, &config.curriculum, epoch, config.seed);
        if pool.is_empty() {
            continue;
        }
        let mut nll_sum = 0.0;
        let mut token_sum = 0.0;
        for chunk in pool.chunks(config.batch) {
            let items: Vec<(&RenderedChart, &str)> = chunk.iter().map(|&i| (&tr.images[i], train[i].id.as_str())).collect();
            let images = augment_batch(&items, config.seed, epoch, &config.augment, config.workers);
            let batch = images
                .iter()
                .zip(chunk)
                .map(|(img, &i)| {
                    Ok(TrainExample {
                        patches: patchify(img, &model_config)?,
                        sequence: &tr.sequences[i],
                    })
                })
                .collect::<Result<Vec<_>, TrainError>>()?;
            let tokens: f64 = batch.iter().map(|e| e.sequence.loss_mask[1..].iter().sum::<f64>()).sum();
            let loss = train_step(&mut params, &mut opt, &batch)?;
            nll_sum += loss * tokens;
            token_sum += tokens;
            steps += 1;
            if config.max_steps.is_some_and(|m| steps >= m) {
                stop = StopReason::MaxSteps;
                break;
            }
        }
        let val_nll = mean_nll(&params, &val_examples)?;
        history.push(HistoryRow {
            epoch,
            train_nll: nll_sum / token_sum,
            val_nll,
            stage,
            steps,
        });
        if val_nll < best.0 {
            best = (val_nll, params.clone(), epoch);
        }
        if stop == StopReason::MaxSteps {
            break 'epochs;
        }
        if epoch >= final_epoch {
            match reference {
                Some(r) if val_nll >= r * (1.0 - config.min_delta) => stale += 1,
                _ => {
                    reference = Some(val_nll);
                    stale = 0;
                }
            }
            if stale >= config.patience {
                stop = StopReason::Plateau;
                break;
            }
        }
    }
    let (best_val_nll, params, best_epoch) = best;
    Ok(FitResult {
        params,
        history,
        best_epoch,
        best_val_nll,
        steps,
        stop,
    })
}
