use super::{TrainError, Variant};
use crate::chartgen::CorpusRecord;
use crate::model::{build_sequence, teacher_forced_loss, ModelParams, Segments, Vocabulary};
use crate::numcore::{OptimizerState, Tape, Tensor};

/// Token ids of one example and the per-position loss weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSequence {
    pub ids: Vec<usize>,
    /// 0 over BOS and the instruction, 1 from the first marker that follows
    /// it (`REASON_OPEN`, or `SUMMARY_OPEN` without reasoning) to the end.
    pub loss_mask: Vec<f64>,
    pub segments: Segments,
}

pub fn build_training_sequence(
    record: &CorpusRecord,
    vocab: &Vocabulary,
    variant: Variant,
) -> Result<TrainingSequence, TrainError> {
    let reasoning = variant.uses_vcot().then_some(record.reasoning.as_str());
    let (ids, segments) = build_sequence(vocab, record.instruction(), reasoning, &record.summary)?;
    let start = if variant.uses_vcot() {
        segments.reasoning.start - 1
    } else {
        segments.summary.start
    };
    let loss_mask = (0..ids.len()).map(|i| if i >= start { 1.0 } else { 0.0 }).collect();
    Ok(TrainingSequence {
        ids,
        loss_mask,
        segments,
    })
}

/// One batch element: image patches plus its sequence.
pub struct TrainExample<'a> {
    pub patches: Tensor,
    pub sequence: &'a TrainingSequence,
}

fn masked_tokens(batch: &[TrainExample]) -> f64 {
    batch.iter().map(|e| e.sequence.loss_mask[1..].iter().sum::<f64>()).sum()
}

/// Mean masked NLL per token over the batch, then one AdamW update of the
/// trainable parameters. Nothing is updated when the loss is not finite.
pub fn train_step(params: &mut ModelParams, opt: &mut OptimizerState, batch: &[TrainExample]) -> Result<f64, TrainError> {
    let n = masked_tokens(batch);
    if batch.is_empty() || n == 0.0 {
        return Err(TrainError::Invalid("batch has no scored tokens".into()));
    }
    let mut tape = Tape::new();
    let b = params.bind(&mut tape, true)?;
    let mut total = None;
    for e in batch {
        let w: Vec<f64> = e.sequence.loss_mask.iter().map(|m| m / n).collect();
        let l = teacher_forced_loss(&mut tape, &b, &params.config, &e.patches, &e.sequence.ids, &w)?;
        total = Some(match total {
            None => l,
            Some(t) => tape.add(t, l)?,
        });
    }
    let total = total.expect("batch is not empty");
    let loss = tape.value(total).item();
    if !loss.is_finite() {
        return Err(TrainError::NonFinite {
            step: opt.step_count() + 1,
            loss,
        });
    }
    let mut grads = tape.backward(total)?;
    let grads: Vec<Option<Tensor>> = params
        .params()
        .iter()
        .enumerate()
        .map(|(i, p)| p.trainable.then(|| grads.take(b.leaf(i))))
        .collect();
    if let Some((p, _)) = params
        .params()
        .iter()
        .zip(&grads)
        .find(|(_, g)| g.as_ref().is_some_and(|g| !g.is_finite()))
    {
        return Err(TrainError::NonFiniteGradient {
            step: opt.step_count() + 1,
            param: p.name.clone(),
        });
    }
    let updates = params
        .params_mut()
        .iter_mut()
        .zip(&grads)
        .filter_map(|(p, g)| g.as_ref().map(|g| (p.name.as_str(), p.value.data_mut(), g.data())));
    opt.step(updates)?;
    Ok(loss)
}

/// Teacher-forced NLL per scored token, without augmentation or updates.
pub fn mean_nll(params: &ModelParams, examples: &[TrainExample]) -> Result<f64, TrainError> {
    let mut sum = 0.0;
    let mut count = 0.0;
    for e in examples {
        let mut tape = Tape::new();
        let b = params.bind(&mut tape, false)?;
        let l = teacher_forced_loss(&mut tape, &b, &params.config, &e.patches, &e.sequence.ids, &e.sequence.loss_mask)?;
        sum += tape.value(l).item();
        count += e.sequence.loss_mask[1..].iter().sum::<f64>();
    }
    if count == 0.0 {
        return Err(TrainError::EmptySplit("evaluation"));
    }
    Ok(sum / count)
}
